"""Covariate effects on topic proportions by the method of composition."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .stm.estep import doc_precisions
from .stm.model import StmModel, softmax_pad

log = logging.getLogger(__name__)

# (name, positive column, negative column or None, positive label, negative label)
CONTRASTS = (
    ("Destruction-Creation", "rel.typeDestruction", "rel.typeCreation", "Destruction", "Creation"),
    ("Brexiteer-Remainer", "fctBrexiteer", "fctRemainer", "Brexiteer", "Remainer"),
    ("negTRUE-FALSE", "negTRUE", None, True, None),
)


class SingularDesignError(ValueError):
    pass


@dataclass
class ContrastResult:
    name: str
    estimate: np.ndarray  # (K,)
    stderr: np.ndarray
    pvalue: np.ndarray


@dataclass
class EffectEstimate:
    columns: list[str]
    coef: np.ndarray       # (P', K)
    vcov: np.ndarray       # (K, P', P')
    draws: int
    contrasts: dict[str, ContrastResult] = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.coef.shape[1]

    def contrast(self, plus: str, minus: str | None = None) -> ContrastResult:
        """Linear contrast ``coef[plus] - coef[minus]`` for every topic."""
        L = np.zeros(len(self.columns))
        L[self.columns.index(plus)] = 1.0
        name = plus
        if minus is not None:
            L[self.columns.index(minus)] = -1.0
            name = f"{plus}-{minus}"
        est = L @ self.coef
        var = np.einsum("i,kij,j->k", L, self.vcov, L)
        se = np.sqrt(np.maximum(var, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, est / se, np.where(est == 0, 0.0, np.inf))
        p = 2.0 * norm.sf(np.abs(z))
        return ContrastResult(name, est, se, p)


def regression_columns(X: np.ndarray, columns: list[str]) -> tuple[np.ndarray, list[str]]:
    """Drop spline columns that are all zero or duplicate the intercept.

    The full B-spline basis sums to one, so its first column is implied by the
    intercept and the rest.
    """
    spline = [i for i, c in enumerate(columns) if c.startswith("s(t)")]
    drop = set()
    if spline and "(Intercept)" in columns:
        if np.allclose(X[:, spline].sum(axis=1), 1.0):
            drop.add(spline[0])
        drop |= {i for i in spline if not np.any(X[:, i])}
    keep = [i for i in range(len(columns)) if i not in drop]
    return X[:, keep], [columns[i] for i in keep]


def _check_rank(X: np.ndarray, columns: list[str]) -> None:
    from scipy.linalg import qr

    _, R, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(X.shape) * np.finfo(float).eps * (diag[0] if len(diag) else 0.0)
    rank = int((diag > tol).sum())
    if rank < X.shape[1]:
        bad = sorted(columns[i] for i in piv[rank:])
        raise SingularDesignError(f"singular design; collinear columns: {', '.join(bad)}")


def _ols(X, XtX_inv, T):
    coef = XtX_inv @ (X.T @ T)
    resid = T - X @ coef
    dof = max(X.shape[0] - X.shape[1], 1)
    s2 = (resid ** 2).sum(axis=0) / dof
    return coef, s2[:, None, None] * XtX_inv[None]


def estimate_effects(model: StmModel, X: np.ndarray, columns: list[str], doc_lengths: np.ndarray,
                     draws: int = 25, seed: int = 0, eta: np.ndarray | None = None) -> EffectEstimate:
    """Regress topic proportions on covariates, propagating per-document uncertainty.

    Each draw samples ``eta_d ~ N(eta_hat_d, nu_d)``, maps it to proportions and
    fits least squares per topic; draws are pooled as ``within + (1 + 1/S) between``.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    eta_hat = model.eta if eta is None else eta
    Xr, cols = regression_columns(np.asarray(X, dtype=float), list(columns))
    _check_rank(Xr, cols)
    XtX_inv = np.linalg.inv(Xr.T @ Xr)
    Sinv = np.linalg.inv(model.Sigma)
    w, U = doc_precisions(np.asarray(doc_lengths, dtype=float), 0.5 * (Sinv + Sinv.T), model.K)
    # nu_d^(1/2) = U diag(w^-1/2) U'
    rng = np.random.default_rng(seed)
    coefs, within = [], np.zeros((model.K, Xr.shape[1], Xr.shape[1]))
    for _ in range(draws):
        z = rng.standard_normal(eta_hat.shape)
        noise = np.einsum("nij,nj->ni", U, np.einsum("nji,nj->ni", U, z) / np.sqrt(w))
        theta = softmax_pad(eta_hat + noise)
        c, v = _ols(Xr, XtX_inv, theta)
        coefs.append(c)
        within += v
    coefs = np.array(coefs)
    mean = coefs.mean(axis=0)
    within /= draws
    if draws > 1:
        dev = coefs - mean
        between = np.einsum("spk,sqk->kpq", dev, dev) / (draws - 1)
        vcov = within + (1.0 + 1.0 / draws) * between
    else:
        vcov = within
    est = EffectEstimate(cols, mean, 0.5 * (vcov + vcov.transpose(0, 2, 1)), draws)
    for name, plus, minus, *_ in CONTRASTS:
        if plus in cols and (minus is None or minus in cols):
            est.contrasts[name] = est.contrast(plus, minus)
    return est


def plain_least_squares(theta: np.ndarray, X: np.ndarray, columns: list[str]) -> np.ndarray:
    Xr, cols = regression_columns(np.asarray(X, dtype=float), list(columns))
    return np.linalg.lstsq(Xr, theta, rcond=None)[0]


@dataclass
class TopicTypeLabels:
    verb_type: list[str | None]
    faction_type: list[str | None]
    negation_flag: list[bool | None]


def type_topics(eff: EffectEstimate, alpha: float = 0.01) -> TopicTypeLabels:
    """Label a topic only when its contrast is significant at ``alpha``; the sign picks the side."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    out = {}
    for name, _, _, pos, neg in CONTRASTS:
        res = eff.contrasts.get(name)
        labels: list = [None] * eff.K
        if res is not None:
            for k in range(eff.K):
                if res.pvalue[k] < alpha and res.estimate[k] != 0:
                    labels[k] = pos if res.estimate[k] > 0 else neg
        out[name] = labels
    neg_flags = [True if v is True else None for v in out["negTRUE-FALSE"]]
    return TopicTypeLabels(out["Destruction-Creation"], out["Brexiteer-Remainer"], neg_flags)


def effects_rows(eff: EffectEstimate, labels: TopicTypeLabels) -> tuple[list[str], list[list]]:
    """Per-topic CSV rows: coefficients, contrasts with errors and p-values, labels."""
    header = ["topic"] + [f"coef:{c}" for c in eff.columns]
    for name, *_ in CONTRASTS:
        header += [f"{name}:estimate", f"{name}:stderr", f"{name}:pvalue"]
    header += ["verb_type", "faction_type", "negation_flag"]
    rows = []
    for k in range(eff.K):
        row = [k + 1] + [float(x) for x in eff.coef[:, k]]
        for name, *_ in CONTRASTS:
            res = eff.contrasts.get(name)
            row += ([float(res.estimate[k]), float(res.stderr[k]), float(res.pvalue[k])]
                    if res else ["", "", ""])
        row += [labels.verb_type[k] or "", labels.faction_type[k] or "",
                "" if labels.negation_flag[k] is None else str(labels.negation_flag[k]).lower()]
        rows.append(row)
    return header, rows
