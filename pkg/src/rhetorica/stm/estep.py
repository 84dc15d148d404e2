"""Per-document variational inference.

For a document with word counts ``c`` the objective in ``eta`` (length K-1) is

    f(eta) = sum_v c_v log(sum_k theta_k beta_kv) - 1/2 (eta - mu)' Sigma^-1 (eta - mu)

with ``theta = softmax(eta || 0)``. Its gradient is ``(S - N theta)[:K-1] -
Sigma^-1 (eta - mu)`` where ``S = sum_v c_v phi_v`` and the likelihood Hessian is
``diag(S) - sum_v c_v phi_v phi_v' - N (diag(theta) - theta theta')``.
The mode is found by damped Newton ascent with that Hessian. The covariance
uses a fixed upper bound ``B`` on the log-sum-exp curvature instead,
``nu = (Sigma^-1 + N B)^-1``, which keeps ``nu`` positive definite and makes
``f(eta) + 1/2 log|nu| - 1/2 log|Sigma|`` a true lower bound on the document's
evidence (up to constants).

Documents are processed in fixed chunks so results do not depend on the number
of worker threads.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .model import StmModel, softmax_pad

log = logging.getLogger(__name__)

EIG_FLOOR = 1e-10
GRAD_TOL = 1e-9
# bound on nnz * (K-1)^2 floats held at once per chunk
CHUNK_BUDGET = 4_000_000
MAX_CHUNK_DOCS = 4096


class NonFiniteObjective(FloatingPointError):
    pass


@dataclass
class _Batch:
    start: int
    stop: int
    rows: np.ndarray      # nnz local doc index
    cols: np.ndarray      # nnz token index
    c: np.ndarray         # nnz counts (float)
    N: np.ndarray         # doc totals
    M: sparse.csr_matrix  # (n, nnz) doc indicator

    @property
    def n(self) -> int:
        return self.stop - self.start


def make_batches(counts: sparse.csr_matrix, K: int) -> list[_Batch]:
    counts = sparse.csr_matrix(counts)
    counts.sort_indices()
    D = counts.shape[0]
    indptr = counts.indptr
    per_doc = max(1, (K - 1) ** 2 + K)
    batches, start = [], 0
    while start < D:
        stop = start + 1
        while (stop < D and stop - start < MAX_CHUNK_DOCS
               and (indptr[stop + 1] - indptr[start]) * per_doc <= CHUNK_BUDGET):
            stop += 1
        lo, hi = indptr[start], indptr[stop]
        local_ptr = indptr[start:stop + 1] - lo
        n, nnz = stop - start, hi - lo
        rows = np.repeat(np.arange(n), np.diff(local_ptr))
        M = sparse.csr_matrix((np.ones(nnz), np.arange(nnz), local_ptr), shape=(n, nnz))
        c = counts.data[lo:hi].astype(float)
        batches.append(_Batch(start, stop, rows, counts.indices[lo:hi].astype(np.int64), c,
                              np.asarray(M @ c).ravel(), M))
        start = stop
    return batches


def _lse(x: np.ndarray, axis: int = -1) -> np.ndarray:
    mx = x.max(axis=axis, keepdims=True)
    return np.log(np.exp(x - mx).sum(axis=axis)) + np.squeeze(mx, axis)


def _subset(b: _Batch, docs: np.ndarray) -> _Batch:
    """Sub-batch holding only the (sorted, local) documents ``docs``."""
    keep = np.zeros(b.n, dtype=bool)
    keep[docs] = True
    nz = keep[b.rows]
    newid = np.cumsum(keep) - 1
    rows = newid[b.rows[nz]]
    n = len(docs)
    ptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
    M = sparse.csr_matrix((np.ones(len(rows)), np.arange(len(rows)), ptr), shape=(n, len(rows)))
    return _Batch(0, n, rows, b.cols[nz], b.c[nz], b.N[docs], M)


@dataclass
class _Terms:
    f: np.ndarray
    grad: np.ndarray
    cphi: np.ndarray | None = None
    prec: np.ndarray | None = None


def _terms(eta, mu, b: _Batch, y, logbeta, Sinv, hess=True, grad=True) -> _Terms:
    K1 = eta.shape[1]
    full = np.concatenate([eta, np.zeros((eta.shape[0], 1))], axis=1)
    logtheta = full - _lse(full)[:, None]
    lb = logbeta[y[b.rows], :, b.cols]
    s = logtheta[b.rows] + lb
    lp = _lse(s)
    ell = b.M @ (b.c * lp)
    diff = eta - mu
    dS = diff @ Sinv
    f = ell - 0.5 * np.einsum("ij,ij->i", dS, diff)
    if not np.all(np.isfinite(f)):
        bad = int(np.flatnonzero(~np.isfinite(f))[0])
        toks = b.cols[b.rows == bad]
        raise NonFiniteObjective(
            f"non-finite objective for document {b.start + bad} (tokens {toks.tolist()[:5]})")
    if not grad:
        return _Terms(f, None)
    phi = np.exp(s - lp[:, None])
    cphi = phi * b.c[:, None]
    S = b.M @ cphi
    th = np.exp(logtheta[:, :K1])
    out = _Terms(f, S[:, :K1] - b.N[:, None] * th - dS, cphi)
    if hess:
        outer = (cphi[:, :K1, None] * phi[:, None, :K1]).reshape(len(b.c), K1 * K1)
        cpp = np.asarray(b.M @ outer).reshape(-1, K1, K1)
        hl = -cpp + b.N[:, None, None] * (th[:, :, None] * th[:, None, :])
        idx = np.arange(K1)
        hl[:, idx, idx] += S[:, :K1] - b.N[:, None] * th
        prec = Sinv[None] - hl
        out.prec = 0.5 * (prec + prec.transpose(0, 2, 1))
    return out


def _eig(prec):
    w, U = np.linalg.eigh(prec)
    scale = np.maximum(1.0, np.abs(w).max(axis=1, keepdims=True))
    return np.maximum(w, EIG_FLOOR * scale), U


def _newton(eta, mu, b, y, logbeta, Sinv, max_iters):
    """Damped Newton ascent on f; only unconverged documents are re-evaluated."""
    eta = eta.copy()
    active = np.arange(len(eta))
    for _ in range(max_iters):
        if len(active) == 0:
            break
        sb = b if len(active) == b.n else _subset(b, active)
        ea, ma, ya = eta[active], mu[active], y[active]
        t = _terms(ea, ma, sb, ya, logbeta, Sinv)
        conv = np.abs(t.grad).max(axis=1) <= GRAD_TOL
        w, U = _eig(t.prec)
        step = np.einsum("nij,nj->ni", U, np.einsum("nji,nj->ni", U, t.grad) / w)
        slope = np.einsum("ij,ij->i", step, t.grad)
        alpha = np.where(conv, 0.0, 1.0)
        f_new = t.f.copy()
        pending = np.flatnonzero(~conv)
        for _ in range(40):
            if len(pending) == 0:
                break
            pb = _subset(sb, pending)
            fc = _terms(ea[pending] + alpha[pending, None] * step[pending], ma[pending], pb,
                        ya[pending], logbeta, Sinv, hess=False, grad=False).f
            ok = fc >= t.f[pending] + 1e-4 * alpha[pending] * slope[pending]
            f_new[pending[ok]] = fc[ok]
            alpha[pending[~ok]] *= 0.5
            pending = pending[~ok]
        alpha[pending] = 0.0
        eta[active] = ea + alpha[:, None] * step
        # stop documents that converged, could not move, or gained only rounding noise
        keep = (alpha > 0) & (f_new - t.f > 1e-15 * np.abs(t.f))
        active = active[keep]
    return eta


def curvature_bound(K: int) -> np.ndarray:
    """Upper bound on the Hessian of log-sum-exp over K-1 free coordinates."""
    K1 = K - 1
    return 0.5 * (np.eye(K1) - np.ones((K1, K1)) / K)


def doc_precisions(N: np.ndarray, Sinv: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of ``Sigma^-1 + N_d B`` per document.

    Documents of equal length share one decomposition.
    """
    uniq, inv = np.unique(N, return_inverse=True)
    w, U = np.linalg.eigh(Sinv[None] + uniq[:, None, None] * curvature_bound(K)[None])
    return w[inv], U[inv]


@dataclass
class EStepResult:
    eta: np.ndarray
    doc_bound: np.ndarray
    nu_sum: np.ndarray
    expected: np.ndarray | None

    @property
    def bound(self) -> float:
        return float(self.doc_bound.sum())


def _chunk(b, eta0, mu_b, y_b, logbeta, Sinv, logdet_sigma, newton, max_iters, want_expected, A, V, K):
    eta = _newton(eta0, mu_b, b, y_b, logbeta, Sinv, max_iters) if newton else eta0
    t = _terms(eta, mu_b, b, y_b, logbeta, Sinv, hess=False)
    w, U = doc_precisions(b.N, Sinv, K)
    bound = t.f - 0.5 * np.log(w).sum(axis=1) - 0.5 * logdet_sigma
    nu_sum = np.einsum("nij,nj,nkj->ik", U, 1.0 / w, U)
    expected = None
    if want_expected:
        key = y_b[b.rows] * V + b.cols
        sel = sparse.csr_matrix((np.ones(len(key)), (key, np.arange(len(key)))), shape=(A * V, len(key)))
        expected = np.asarray(sel @ t.cphi).reshape(A, V, K).transpose(0, 2, 1)
    return eta, bound, nu_sum, expected


def run_estep(batches: list[_Batch], mu: np.ndarray, Y: np.ndarray, logbeta: np.ndarray,
              Sigma: np.ndarray, eta0: np.ndarray, *, newton: bool = True, max_iters: int = 50,
              want_expected: bool = True, threads: int = 1) -> EStepResult:
    """Infer (or, with ``newton=False``, just score) all documents.

    The per-document bound is ``f(eta) - 1/2 log|Sigma| - 1/2 log|Sigma^-1 + N B|``,
    a true evidence lower bound once ``phi`` and ``nu`` are at their optima.
    """
    A, K, V = logbeta.shape
    K1 = K - 1
    try:
        chol = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("Sigma is not positive definite") from None
    Sinv = np.linalg.inv(Sigma)
    Sinv = 0.5 * (Sinv + Sinv.T)
    logdet_sigma = 2.0 * np.log(np.diag(chol)).sum()

    def job(b):
        mu_b = mu[b.start:b.stop]
        e0 = eta0[b.start:b.stop].copy()
        empty = b.N == 0
        e0[empty] = mu_b[empty]
        return _chunk(b, e0, mu_b, Y[b.start:b.stop], logbeta, Sinv, logdet_sigma,
                      newton, max_iters, want_expected, A, V, K)

    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, batches))
    else:
        results = [job(b) for b in batches]

    eta = np.zeros((len(eta0), K1))
    bound = np.zeros(len(eta0))
    nu_sum = np.zeros((K1, K1))
    expected = np.zeros((A, K, V)) if want_expected else None
    for b, (e, bd, ns, ex_) in zip(batches, results):
        eta[b.start:b.stop] = e
        bound[b.start:b.stop] = bd
        nu_sum += ns
        if want_expected:
            expected += ex_
    return EStepResult(eta, bound, nu_sum, expected)


@dataclass
class DocPosterior:
    eta_hat: np.ndarray
    nu: np.ndarray
    theta: np.ndarray
    phi: np.ndarray          # (n_unique_tokens, K)
    token_ids: np.ndarray
    bound: float
    grad: np.ndarray


def e_step(doc, x_d: np.ndarray, model: StmModel, y_d: int = 0,
           max_iters: int = 50) -> DocPosterior:
    """Single-document inference starting from the prior mean."""
    row = sparse.csr_matrix(np.atleast_2d(doc.toarray() if sparse.issparse(doc) else doc))
    if row.shape[1] != model.V:
        raise ValueError(f"document has {row.shape[1]} columns, model vocabulary is {model.V}")
    b = make_batches(row, model.K)[0]
    mu = np.atleast_2d(np.asarray(x_d, dtype=float) @ model.gamma)
    y = np.array([y_d])
    logbeta = model.log_beta()
    Sigma = model.Sigma
    np.linalg.cholesky(Sigma)
    Sinv = np.linalg.inv(Sigma)
    eta = _newton(mu.copy(), mu, b, y, logbeta, Sinv, max_iters) if b.N[0] > 0 else mu.copy()
    t = _terms(eta, mu, b, y, logbeta, Sinv, hess=False)
    w, U = doc_precisions(b.N, Sinv, model.K)
    nu = (U[0] / w[0]) @ U[0].T
    logdet_sigma = np.linalg.slogdet(Sigma)[1]
    bound = float(t.f[0] - 0.5 * np.log(w[0]).sum() - 0.5 * logdet_sigma)
    phi = t.cphi / b.c[:, None]
    return DocPosterior(eta[0], nu, softmax_pad(eta)[0], phi, b.cols.copy(), bound, t.grad[0])


def doc_objective(eta: np.ndarray, doc, x_d, model: StmModel, y_d: int = 0) -> tuple[float, np.ndarray]:
    """(f, gradient) of the per-document objective at ``eta``; used for checks."""
    row = sparse.csr_matrix(np.atleast_2d(doc))
    b = make_batches(row, model.K)[0]
    mu = np.atleast_2d(np.asarray(x_d, dtype=float) @ model.gamma)
    Sinv = np.linalg.inv(model.Sigma)
    t = _terms(np.atleast_2d(eta), mu, b, np.array([y_d]), model.log_beta(), Sinv, hess=False)
    return float(t.f[0]), t.grad[0]


def posterior_covariances(model: StmModel, counts, rows: np.ndarray | None = None) -> np.ndarray:
    """Variational covariances ``nu_d`` for the requested documents."""
    N = np.asarray(sparse.csr_matrix(counts).sum(axis=1), dtype=float).ravel()
    if rows is not None:
        N = N[rows]
    Sinv = np.linalg.inv(model.Sigma)
    w, U = doc_precisions(N, 0.5 * (Sinv + Sinv.T), model.K)
    return np.einsum("nij,nj,nkj->nik", U, 1.0 / w, U)
