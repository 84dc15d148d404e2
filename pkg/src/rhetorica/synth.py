"""Synthetic data drawn from the model's own generative processes (tests, fixtures)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .stm.model import softmax_pad


@dataclass
class SyntheticCorpus:
    counts: sparse.csr_matrix
    X: np.ndarray
    Y: np.ndarray
    beta: np.ndarray      # (A, K, V)
    theta: np.ndarray     # (D, K)
    gamma: np.ndarray
    Sigma: np.ndarray


def planted_topics(K: int, V: int, rng: np.random.Generator, boost: float = 3.0,
                   words_per_topic: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Baseline log-frequencies plus one block of boosted words per topic."""
    m = rng.normal(0.0, 0.5, V)
    m -= np.log(np.exp(m).sum())
    w = words_per_topic or V // K
    kappa = np.zeros((K, V))
    perm = rng.permutation(V)
    for k in range(K):
        kappa[k, perm[k * w:(k + 1) * w]] = boost
    return m, kappa


def generate_stm_corpus(D: int = 2000, V: int = 300, K: int = 4, seed: int = 0,
                        doc_len: float = 60.0, n_levels: int = 1, content_boost: float = 0.0,
                        gamma_scale: float = 0.7, sigma_scale: float = 0.5,
                        topic_boost: float = 3.0) -> SyntheticCorpus:
    """Documents with prevalence covariates (binary + continuous) and an optional content factor."""
    rng = np.random.default_rng(seed)
    m, kt = planted_topics(K, V, rng, boost=topic_boost)
    x1 = rng.integers(0, 2, D).astype(float)
    x2 = rng.uniform(-1, 1, D)
    X = np.column_stack([np.ones(D), x1, x2])
    gamma = rng.normal(0.0, gamma_scale, (3, K - 1))
    gamma[0] = 0.0
    L = rng.normal(0, 0.3, (K - 1, K - 1))
    Sigma = sigma_scale * np.eye(K - 1) + 0.1 * L @ L.T
    eta = X @ gamma + rng.multivariate_normal(np.zeros(K - 1), Sigma, D)
    theta = softmax_pad(eta)
    Y = rng.integers(0, n_levels, D)
    kc = np.zeros((n_levels, V))
    if content_boost and n_levels > 1:
        for a in range(n_levels):
            kc[a, rng.choice(V, V // 10, replace=False)] = content_boost
    lin = m[None, None] + kt[None] + kc[:, None]
    beta = np.exp(lin - lin.max(axis=2, keepdims=True))
    beta /= beta.sum(axis=2, keepdims=True)
    n = np.maximum(rng.poisson(doc_len, D), 2)
    rows = []
    for d in range(D):
        z = rng.multinomial(n[d], theta[d])
        c = np.zeros(V, dtype=np.int64)
        for k in np.flatnonzero(z):
            c += rng.multinomial(z[k], beta[Y[d], k])
        rows.append(c)
    counts = sparse.csr_matrix(np.array(rows))
    return SyntheticCorpus(counts, X, Y, beta, theta, gamma, Sigma)


def matched_cosine(true_beta: np.ndarray, est_beta: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cosine after optimal one-to-one topic matching (Hungarian)."""
    from scipy.optimize import linear_sum_assignment

    a = true_beta / np.linalg.norm(true_beta, axis=1, keepdims=True)
    b = est_beta / np.linalg.norm(est_beta, axis=1, keepdims=True)
    sim = a @ b.T
    r, c = linear_sum_assignment(-sim)
    return float(sim[r, c].mean()), c


# tweet fixture -----------------------------------------------------------------

_THEMES = (
    ("food shortages", "empty shelves", "food prices", "supermarket queues"),
    ("uk economy", "british jobs", "car industry", "manufacturing jobs"),
    ("border chaos", "lorry queues", "port delays", "customs checks"),
    ("medicine shortages", "nhs crisis", "hospital supplies", "drug stocks"),
)
_VERBS = ("will destroy", "would cause", "will create", "could lead to", "will kill",
          "will not cause", "won't create", "is going to trigger", "will produce")
_PASSIVE = ("will be caused by", "would be destroyed by", "will be created by")
_BIOS = {
    "Brexiteer": ("Proud brexiteer. Vote Leave.", "UKIP member, respect my vote"),
    "Remainer": ("Remainer and pro-EU", "Campaigning for a new vote"),
    "Other": ("Dad, runner, coffee lover", "Local journalist"),
}
_FILLER = ("Honestly.", "Wake up people!", "Think about it.", "Simple as that.")


def generate_tweets(n: int = 200, seed: int = 0, n_days: int = 40,
                    start: str = "2019-09-01") -> list[dict]:
    """Small labelled tweet corpus for end-to-end runs.

    Each tweet states one or two no-deal causal claims whose effect is drawn
    from a faction-tilted theme; a few retweets, off-topic posts and non-causal
    tweets are mixed in.
    """
    from datetime import datetime, timedelta, timezone

    rng = np.random.default_rng(seed)
    t0 = datetime.fromisoformat(start).replace(tzinfo=timezone.utc)
    factions = list(_BIOS)
    tilt = {"Brexiteer": [0.1, 0.5, 0.2, 0.2], "Remainer": [0.4, 0.1, 0.2, 0.3],
            "Other": [0.25, 0.25, 0.25, 0.25]}
    out = []
    for i in range(n):
        fac = factions[int(rng.integers(0, 3))]
        when = t0 + timedelta(days=int(rng.integers(0, n_days)), seconds=int(rng.integers(0, 86400)))
        claims = []
        for _ in range(1 + int(rng.random() < 0.3)):
            theme = _THEMES[rng.choice(4, p=tilt[fac])]
            effect = theme[int(rng.integers(0, len(theme)))]
            subject = ("a no deal brexit", "no deal", "a no-deal exit")[int(rng.integers(0, 3))]
            if rng.random() < 0.2:
                verb = _PASSIVE[int(rng.integers(0, len(_PASSIVE)))]
                claims.append(f"The {effect} {verb} {subject}.")
            else:
                verb = _VERBS[int(rng.integers(0, len(_VERBS)))]
                claims.append(f"{subject.capitalize()} {verb} the {effect}.")
        kind = rng.random()
        if kind < 0.05:
            text = "Trade talks with China stall again."
        elif kind < 0.10:
            text = "Lovely weather in Leeds today."
        else:
            text = " ".join(claims + [_FILLER[int(rng.integers(0, len(_FILLER)))]])
        bio = _BIOS[fac][int(rng.integers(0, 2))]
        out.append({"id": f"t{i:04d}", "created_at": when.isoformat().replace("+00:00", "Z"),
                    "text": text, "user_bio": bio, "is_retweet": bool(rng.random() < 0.1)})
    return out
