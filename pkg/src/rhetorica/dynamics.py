"""Daily faction topic series, DTW lead/follow index and weekly movers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class FactionTopicSeries:
    start: date
    series: dict[str, np.ndarray]  # faction -> (days, K)

    @property
    def n_days(self) -> int:
        return next(iter(self.series.values())).shape[0] if self.series else 0

    def dates(self) -> list[date]:
        return [self.start + timedelta(days=i) for i in range(self.n_days)]


def _as_date(d) -> date:
    return date.fromisoformat(d) if isinstance(d, str) else d


def build_series(theta: np.ndarray, days: Sequence, factions: Sequence[str],
                 levels: Sequence[str] = ("Brexiteer", "Remainer", "Other")) -> FactionTopicSeries:
    """Mean proportions per (day, faction); days without documents stay all-zero."""
    theta = np.asarray(theta, dtype=float)
    ds = [_as_date(d) for d in days]
    if not ds:
        return FactionTopicSeries(date(1970, 1, 1), {lv: np.zeros((0, theta.shape[1])) for lv in levels})
    start = min(ds)
    idx = np.array([(d - start).days for d in ds])
    T = int(idx.max()) + 1
    out = {}
    fac = np.asarray(factions)
    for lv in levels:
        mask = fac == lv
        sums = np.zeros((T, theta.shape[1]))
        np.add.at(sums, idx[mask], theta[mask])
        n = np.bincount(idx[mask], minlength=T).astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[lv] = np.where(n[:, None] > 0, sums / np.maximum(n, 1)[:, None], 0.0)
    return FactionTopicSeries(start, out)


def dtw_path(a: np.ndarray, b: np.ndarray, ta: np.ndarray, tb: np.ndarray,
             max_lag: int) -> list[tuple[int, int]] | None:
    """Optimal monotone alignment of frames ``a`` (days ``ta``) and ``b`` (days ``tb``).

    Pairs with ``|ta[i] - tb[j]| > max_lag`` are forbidden. Backtracking prefers
    the diagonal move on ties, then the predecessor with the smaller day offset.
    Returns ``None`` when no admissible path exists.
    """
    n, m = len(a), len(b)
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    off = np.abs(ta[:, None] - tb[None, :])
    cost[off > max_lag] = np.inf
    acc = np.full((n, m), np.inf)
    for i in range(n):
        for j in range(m):
            if not np.isfinite(cost[i, j]):
                continue
            if i == 0 and j == 0:
                acc[i, j] = cost[i, j]
                continue
            best = min(acc[i - 1, j - 1] if i and j else np.inf,
                       acc[i - 1, j] if i else np.inf,
                       acc[i, j - 1] if j else np.inf)
            acc[i, j] = cost[i, j] + best
    if not np.isfinite(acc[n - 1, m - 1]):
        return None
    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        cands = []
        if i and j:
            cands.append((acc[i - 1, j - 1], 0, off[i - 1, j - 1], (i - 1, j - 1)))
        if i:
            cands.append((acc[i - 1, j], 1, off[i - 1, j], (i - 1, j)))
        if j:
            cands.append((acc[i, j - 1], 1, off[i, j - 1], (i, j - 1)))
        i, j = min(cands, key=lambda c: (c[0], c[1], c[2]))[3]
        path.append((i, j))
    return path[::-1]


def mean_offset(A: np.ndarray, B: np.ndarray, lo: int, hi: int, max_lag: int) -> float | None:
    """Mean of ``day_B - day_A`` along the DTW path over days ``lo..hi``; positive if B trails A."""
    ta = np.array([t for t in range(lo, hi + 1) if np.any(A[t])])
    tb = np.array([t for t in range(lo, hi + 1) if np.any(B[t])])
    if len(ta) == 0 or len(tb) == 0:
        return None
    path = dtw_path(A[ta], B[tb], ta, tb, max_lag)
    if path is None:
        return None
    return float(np.mean([tb[j] - ta[i] for i, j in path]))


@dataclass
class LeadFollowResult:
    days: list[int]
    f_b_follows_a: list[float | None]
    f_a_follows_b: list[float | None]
    fl: list[float | None]
    params: dict = field(default_factory=dict)

    def evaluable(self) -> list[int]:
        return [i for i, v in enumerate(self.fl) if v is not None]


def lead_follow(A: np.ndarray, B: np.ndarray, window: int = 30, max_lag: int = 6,
                shift: int = 1) -> LeadFollowResult:
    """Windowed lead/follow index; ``fl > 0`` means ``A`` leads (``B`` follows).

    The signed offset is averaged over both argument orders, which makes the
    index exactly antisymmetric even when alignment ties are resolved
    differently.
    """
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError("series must share the same day axis and topic count")
    T = A.shape[0]
    if window > T:
        raise ValueError(f"window {window} exceeds series length {T}")
    if max_lag < 1 or shift < 1 or window < 1:
        raise ValueError("window, max_lag and shift must be positive")
    res = LeadFollowResult([], [], [], [], {"window": window, "max_lag": max_lag, "shift": shift})
    for x in range(window - 1, T, shift):
        lo = x - window + 1
        s_ab = mean_offset(A, B, lo, x, max_lag)
        s_ba = mean_offset(B, A, lo, x, max_lag)
        res.days.append(x)
        if s_ab is None or s_ba is None:
            res.f_b_follows_a.append(None)
            res.f_a_follows_b.append(None)
            res.fl.append(None)
            continue
        s = 0.5 * (s_ab - s_ba)
        f = min(abs(s) / max_lag, 1.0)
        fb, fa = (f, 0.0) if s > 0 else ((0.0, f) if s < 0 else (0.0, 0.0))
        res.f_b_follows_a.append(fb)
        res.f_a_follows_b.append(fa)
        res.fl.append(fb - fa)
    return res


@dataclass
class Mover:
    day: int
    faction: str
    sign: str
    rank: int
    topic: int
    delta: float


def weekly_movers(series: FactionTopicSeries, top_n: int = 3, lag: int = 7) -> list[Mover]:
    """Largest positive and negative ``lag``-day changes per day and faction (1-based topics)."""
    out = []
    for faction in series.series:
        W = series.series[faction]
        for x in range(lag, W.shape[0]):
            if not np.any(W[x]) or not np.any(W[x - lag]):
                continue
            var = W[x] - W[x - lag]
            for sign, mask in (("+", var > 0), ("-", var < 0)):
                ks = np.flatnonzero(mask)
                order = sorted(ks, key=lambda k: (-abs(var[k]), k))[:top_n]
                for r, k in enumerate(order, start=1):
                    out.append(Mover(x, faction, sign, r, int(k) + 1, float(var[k])))
    return out
