"""Variational EM driver, held-out likelihood and the K-selection protocol."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .estep import make_batches, run_estep
from .init import random_init, spectral_init
from .model import StmConfig, StmModel, softmax_pad
from .mstep import log_prior, update_gamma, update_kappa, update_sigma

log = logging.getLogger(__name__)


def initial_model(counts, X, Y, cfg: StmConfig, y_levels=None) -> StmModel:
    D, V = counts.shape
    A = int(Y.max()) + 1 if len(Y) else 1
    if cfg.init == "spectral":
        m, kt, _ = spectral_init(counts, cfg.K)
    else:
        m, kt, _ = random_init(counts, cfg.K, cfg.init_seed)
    K1 = cfg.K - 1
    sigma2 = np.full(K1, max((cfg.s_gamma - 1) / cfg.r_gamma, 1.0) if cfg.r_gamma > 0 else 1.0)
    return StmModel(
        K=cfg.K, m=m, kappa_t=kt, kappa_c=np.zeros((A, V)), kappa_i=np.zeros((A, cfg.K, V)),
        gamma=np.zeros((X.shape[1], K1)), sigma2=sigma2, Sigma=np.eye(K1),
        eta=np.zeros((D, K1)),
        y_levels=list(y_levels) if y_levels is not None else [str(a) for a in range(A)],
        config=cfg.to_dict())


def _check_inputs(counts, X, Y, cfg):
    D = counts.shape[0]
    if X.shape[0] != D or len(Y) != D:
        raise ValueError(f"corpus has {D} rows but design has {X.shape[0]} and Y has {len(Y)}")
    if D < cfg.K:
        raise ValueError(f"need at least K={cfg.K} documents, got {D}")
    if cfg.K > counts.shape[1]:
        raise ValueError(f"K={cfg.K} exceeds the vocabulary size {counts.shape[1]}")


def fit(counts, X: np.ndarray, Y: np.ndarray | None, cfg: StmConfig, y_levels=None,
        model: StmModel | None = None) -> StmModel:
    """Alternate inference and parameter updates until the relative bound gain < em_tol."""
    counts = sparse.csr_matrix(counts)
    X = np.asarray(X, dtype=float)
    Y = np.zeros(counts.shape[0], dtype=np.int64) if Y is None else np.asarray(Y, dtype=np.int64)
    _check_inputs(counts, X, Y, cfg)
    model = initial_model(counts, X, Y, cfg, y_levels) if model is None else model.copy()
    model.config = cfg.to_dict()
    batches = make_batches(counts, cfg.K)
    lam = cfg.l1_penalty
    kappas = lambda mdl: (mdl.kappa_t, mdl.kappa_c, mdl.kappa_i)

    prev = None
    model.bound_trace = []
    model.converged_at = None
    for it in range(1, cfg.max_em_iters + 1):
        logbeta = model.log_beta()
        mu = X @ model.gamma
        es = run_estep(batches, mu, Y, logbeta, model.Sigma, model.eta,
                       max_iters=cfg.newton_max_iters, threads=cfg.threads)
        model.eta = es.eta
        b_e = es.bound + log_prior(model.gamma, model.sigma2, kappas(model), cfg)

        model.gamma, model.sigma2 = update_gamma(model.eta, X, model.Sigma, model.sigma2, cfg)
        resid = model.eta - X @ model.gamma
        model.Sigma = update_sigma(es.nu_sum, resid)

        model.kappa_t, model.kappa_c, model.kappa_i = update_kappa(
            es.expected, model.m, *kappas(model), lam, cfg.kappa_sweeps)
        # every update above ascends the same bound, so rescoring needs no line search
        ev = run_estep(batches, X @ model.gamma, Y, model.log_beta(), model.Sigma, model.eta,
                       newton=False, want_expected=False, threads=cfg.threads)
        bound = ev.bound + log_prior(model.gamma, model.sigma2, kappas(model), cfg)
        if bound < b_e - 1e-9 * abs(b_e):
            log.warning("iteration %d: bound fell from %.6f to %.6f", it, b_e, bound)
        model.bound_trace.append(float(bound))
        log.debug("EM %d bound %.6f", it, bound)
        if prev is not None and (bound - prev) / abs(prev) < cfg.em_tol:
            model.converged_at = it
            break
        prev = bound
    if model.converged_at is None:
        log.warning("no convergence after %d EM iterations", cfg.max_em_iters)
    else:
        log.info("converged after %d EM iterations, bound %.6f", model.converged_at, model.bound_trace[-1])
    return model


# held-out evaluation -------------------------------------------------------------

def split_for_completion(counts, heldout_fraction: float, rng: np.random.Generator):
    """Return (training counts, heldout doc rows, second-half counts, n_excluded).

    Held-out documents keep a random half of their tokens in the training
    matrix; the other half is scored.
    """
    counts = sparse.csr_matrix(counts)
    D, V = counts.shape
    n_held = int(round(heldout_fraction * D))
    chosen = np.sort(rng.choice(D, size=n_held, replace=False)) if n_held else np.array([], int)
    train = counts.tolil(copy=True)
    held_rows, second, excluded = [], [], 0
    for d in chosen:
        row = counts.getrow(d)
        toks = np.repeat(row.indices, row.data.astype(np.int64))
        if len(toks) < 2:
            excluded += 1
            continue
        toks = rng.permutation(toks)
        half = len(toks) // 2
        first = np.bincount(toks[:half], minlength=V)
        rest = np.bincount(toks[half:], minlength=V)
        train[d] = first
        held_rows.append(d)
        second.append(rest)
    second_m = sparse.csr_matrix(np.array(second)) if second else sparse.csr_matrix((0, V))
    return sparse.csr_matrix(train), np.array(held_rows, dtype=np.int64), second_m, excluded


def completion_loglik(model: StmModel, rows, second, Y) -> float:
    """Mean per-token log-likelihood of the held-out halves."""
    if len(rows) == 0:
        return float("nan")
    logbeta = model.log_beta()
    logtheta = np.log(softmax_pad(model.eta[rows]))
    second = sparse.csr_matrix(second)
    total, ntok = 0.0, 0.0
    for i, d in enumerate(rows):
        lo, hi = second.indptr[i], second.indptr[i + 1]
        v, c = second.indices[lo:hi], second.data[lo:hi]
        lp = logsumexp(logtheta[i][:, None] + logbeta[Y[d]][:, v], axis=0)
        total += float(c @ lp)
        ntok += float(c.sum())
    return total / ntok


def heldout_likelihood(counts, X, Y, cfg: StmConfig, heldout_fraction: float = 0.25,
                       seed: int = 0, y_levels=None) -> tuple[float, StmModel, int]:
    """Document-completion score; returns (mean per-token loglik, fitted model, n_excluded)."""
    if not 0 < heldout_fraction < 1:
        raise ValueError("heldout_fraction must be in (0, 1)")
    Y = np.zeros(counts.shape[0], dtype=np.int64) if Y is None else np.asarray(Y)
    rng = np.random.default_rng(seed)
    train, rows, second, excluded = split_for_completion(counts, heldout_fraction, rng)
    if excluded:
        log.info("excluded %d held-out documents with fewer than 2 tokens", excluded)
    keep_cols = np.asarray(train.sum(axis=0)).ravel() > 0
    if not keep_cols.all():
        # tokens seen only in scored halves cannot be modelled; drop them everywhere
        train = train[:, keep_cols]
        second = second[:, keep_cols]
    model = fit(train, X, Y, cfg, y_levels)
    return completion_loglik(model, rows, second, Y), model, excluded


@dataclass
class KSelectionResult:
    grid: list[int]
    replications: int
    heldout_fraction: float
    per_rep_bound: dict[int, list[float]] = field(default_factory=dict)
    per_rep_heldout: dict[int, list[float]] = field(default_factory=dict)
    failures: dict[int, int] = field(default_factory=dict)

    def mean_bound(self, K: int) -> float:
        v = self.per_rep_bound.get(K, [])
        return float(np.mean(v)) if v else float("nan")

    def mean_heldout(self, K: int) -> float:
        v = self.per_rep_heldout.get(K, [])
        return float(np.mean(v)) if v else float("nan")

    def rows(self) -> list[list]:
        return [[K, self.mean_bound(K), self.mean_heldout(K), len(self.per_rep_heldout.get(K, []))]
                for K in self.grid]

    def best_k(self) -> int:
        return max(self.grid, key=lambda K: (np.nan_to_num(self.mean_heldout(K), nan=-np.inf), -K))


def select_k(counts, X, Y, grid: list[int], cfg: StmConfig, replications: int = 50,
             heldout_fraction: float = 0.25, seed: int = 0, y_levels=None) -> KSelectionResult:
    if not grid:
        raise ValueError("K grid is empty")
    res = KSelectionResult(list(grid), replications, heldout_fraction)
    seeds = np.random.SeedSequence(seed).spawn(replications)
    for K in grid:
        res.per_rep_bound[K], res.per_rep_heldout[K], res.failures[K] = [], [], 0
        kcfg = replace(cfg, K=K)
        for r in range(replications):
            # the split depends only on the replication, so every K sees the same splits
            rep_seed = int(seeds[r].generate_state(1)[0])
            try:
                score, model, _ = heldout_likelihood(counts, X, Y, kcfg, heldout_fraction,
                                                     rep_seed, y_levels)
            except Exception as exc:  # noqa: BLE001 - replication failures are reported
                log.error("K=%d replication %d failed: %s", K, r, exc)
                res.failures[K] += 1
                continue
            res.per_rep_bound[K].append(model.bound_trace[-1])
            res.per_rep_heldout[K].append(score)
        log.info("K=%d heldout %.5f bound %.3f", K, res.mean_heldout(K), res.mean_bound(K))
    return res
