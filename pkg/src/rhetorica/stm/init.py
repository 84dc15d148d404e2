"""Initial topic-word distributions: anchor-word spectral method or random."""

from __future__ import annotations

import logging

import numpy as np
from scipy import sparse

log = logging.getLogger(__name__)

# mixing weight towards corpus frequencies; keeps initial deviations bounded
SMOOTH = 0.05


class SpectralInitError(RuntimeError):
    pass


def empirical_log_freq(counts: sparse.spmatrix) -> np.ndarray:
    totals = np.asarray(counts.sum(axis=0), dtype=float).ravel()
    if np.any(totals <= 0):
        raise ValueError("every token needs a positive corpus count")
    return np.log(totals / totals.sum())


def cooccurrence(counts: sparse.spmatrix) -> np.ndarray:
    """Expected word-pair co-occurrence over documents with at least two tokens."""
    W = sparse.csr_matrix(counts, dtype=float)
    n = np.asarray(W.sum(axis=1)).ravel()
    keep = n >= 2
    W, n = W[keep], n[keep]
    if W.shape[0] == 0:
        raise SpectralInitError("spectral init failed, use Random(seed): no document has 2+ tokens")
    norm = n * (n - 1)
    Wn = sparse.diags(1.0 / np.sqrt(norm)) @ W
    Q = (Wn.T @ Wn).toarray()
    Q -= np.diag(np.asarray((sparse.diags(1.0 / norm) @ W).sum(axis=0)).ravel())
    return Q / Q.sum()


def select_anchors(Qbar: np.ndarray, K: int, tol: float = 1e-10) -> list[int]:
    """Successive projection: repeatedly take the row farthest from the current span."""
    R = Qbar.copy()
    norms0 = np.einsum("ij,ij->i", R, R)
    scale = norms0.max()
    anchors = []
    for _ in range(K):
        norms = np.einsum("ij,ij->i", R, R)
        i = int(np.argmax(norms))
        if scale <= 0 or norms[i] <= tol * scale:
            raise SpectralInitError(
                f"spectral init failed, use Random(seed): only {len(anchors)} "
                f"distinguishable co-occurrence rows for K={K}")
        anchors.append(i)
        u = R[i] / np.sqrt(norms[i])
        R -= np.outer(R @ u, u)
    return anchors


def project_simplex(Y: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    n, k = Y.shape
    U = -np.sort(-Y, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = U - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = css[np.arange(n), rho] / (rho + 1)
    return np.maximum(Y - tau[:, None], 0.0)


def recover_weights(Qbar: np.ndarray, anchors: list[int], iters: int = 500) -> np.ndarray:
    """Simplex-constrained least squares of every row on the anchor rows (accelerated PG)."""
    S = Qbar[anchors]
    G = S @ S.T
    B = Qbar @ S.T
    L = max(np.linalg.eigvalsh(G)[-1], 1e-300)
    K = len(anchors)
    C = np.full((Qbar.shape[0], K), 1.0 / K)
    Z, t = C.copy(), 1.0
    for _ in range(iters):
        C_new = project_simplex(Z - (Z @ G - B) / L)
        t_new = (1 + np.sqrt(1 + 4 * t * t)) / 2
        Z = C_new + ((t - 1) / t_new) * (C_new - C)
        C, t = C_new, t_new
    return C


def spectral_init(counts: sparse.spmatrix, K: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(m, kappa_t, theta)``; deterministic in the corpus."""
    D, V = counts.shape
    if K > V:
        raise ValueError(f"K={K} exceeds the vocabulary size {V}")
    m = empirical_log_freq(counts)
    Q = cooccurrence(counts)
    p = Q.sum(axis=1)
    rows = p > 0
    Qbar = np.zeros_like(Q)
    Qbar[rows] = Q[rows] / p[rows, None]
    anchors = select_anchors(Qbar, K)
    log.debug("spectral anchors: %s", anchors)
    C = recover_weights(Qbar, anchors)
    A = C * p[:, None]
    colsum = A.sum(axis=0)
    if np.any(colsum <= 0):
        raise SpectralInitError("spectral init failed, use Random(seed): empty recovered topic")
    beta = (A / colsum).T
    beta = (1 - SMOOTH) * beta + SMOOTH * np.exp(m)[None, :]
    kappa_t = np.log(beta) - m[None, :]
    theta = np.full((D, K), 1.0 / K)
    return m, kappa_t, theta


def random_init(counts: sparse.spmatrix, K: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    D, V = counts.shape
    m = empirical_log_freq(counts)
    rng = np.random.default_rng(seed)
    kappa_t = rng.normal(0.0, 1.0, size=(K, V))
    theta = np.full((D, K), 1.0 / K)
    return m, kappa_t, theta
