"""M-step updates: prevalence regression, topic covariance, content deviations."""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .model import StmConfig

log = logging.getLogger(__name__)


def penalty_mask(P: int) -> np.ndarray:
    """Intercept (column 0) is not shrunk."""
    mask = np.ones(P)
    mask[0] = 0.0
    return mask


def _sigma2_map(gamma: np.ndarray, mask: np.ndarray, s: float, r: float) -> np.ndarray:
    """Mode of each topic's prior variance given its coefficients."""
    a = 0.5 * (mask[:, None] * gamma ** 2).sum(axis=0)
    b = 0.5 * mask.sum() - s + 1.0
    if r > 0:
        x = (-b + np.sqrt(b * b + 4 * r * a)) / (2 * r)
    else:
        x = a / max(b, 1e-12)
    return np.maximum(x, 1e-10)


def _ridge_gls(eta, X, Sinv, sigma2, mask, XtX=None):
    """argmin sum_d (eta_d - G'x_d)' Sinv (eta_d - G'x_d) + sum_k g_k' diag(mask/sigma2_k) g_k."""
    P, K1 = X.shape[1], eta.shape[1]
    XtX = X.T @ X if XtX is None else XtX
    lhs = np.kron(Sinv, XtX)
    lhs[np.diag_indices_from(lhs)] += (mask[None, :] / sigma2[:, None]).ravel()
    rhs = (X.T @ eta @ Sinv).T.ravel()
    sol = linalg.solve(lhs, rhs, assume_a="sym")
    return sol.reshape(K1, P).T


def update_gamma(eta: np.ndarray, X: np.ndarray, Sigma: np.ndarray, sigma2: np.ndarray,
                 cfg: StmConfig) -> tuple[np.ndarray, np.ndarray]:
    """Alternate ridge regression and variance MAP until the coefficients settle."""
    mask = penalty_mask(X.shape[1])
    Sinv = np.linalg.inv(Sigma)
    XtX = X.T @ X
    gamma = None
    for it in range(cfg.gamma_max_iters):
        new = _ridge_gls(eta, X, Sinv, sigma2, mask, XtX)
        sigma2 = _sigma2_map(new, mask, cfg.s_gamma, cfg.r_gamma)
        if gamma is not None and np.max(np.abs(new - gamma)) <= 1e-8 * max(1.0, np.abs(new).max()):
            gamma = new
            break
        gamma = new
    else:
        log.debug("gamma update hit gamma_max_iters=%d", cfg.gamma_max_iters)
    return gamma, sigma2


def update_sigma(nu_sum: np.ndarray, resid: np.ndarray) -> np.ndarray:
    D = resid.shape[0]
    S = (nu_sum + resid.T @ resid) / D
    S = 0.5 * (S + S.T)
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        log.warning("Sigma update not positive definite; adding 1e-6 I")
        S = S + 1e-6 * np.eye(S.shape[0])
    return S


def log_prior(gamma, sigma2, kappas, cfg: StmConfig) -> float:
    mask = penalty_mask(gamma.shape[0])
    P1 = mask.sum()
    lp = -0.5 * ((mask[:, None] * gamma ** 2) / sigma2[None, :]).sum()
    lp -= 0.5 * P1 * np.log(sigma2).sum()
    lp += ((cfg.s_gamma - 1) * np.log(sigma2) - cfg.r_gamma * sigma2).sum()
    lam = cfg.l1_penalty
    if lam > 0:
        lp -= lam * sum(np.abs(k).sum() for k in kappas)
    return float(lp)


# content deviations -------------------------------------------------------------

def _lin(m, kt, kc, ki):
    return m[None, None, :] + kt[None, :, :] + kc[:, None, :] + ki


def kappa_objective(E, m, kt, kc, ki, lam) -> float:
    """Penalised expected complete-data log-likelihood of the word draws."""
    lin = _lin(m, kt, kc, ki)
    T = E.sum(axis=2)
    val = (E * lin).sum() - (T * logsumexp(lin, axis=2)).sum()
    return float(val - lam * (np.abs(kt).sum() + np.abs(kc).sum() + np.abs(ki).sum()))


def _soft(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def update_kappa(E: np.ndarray, m: np.ndarray, kt: np.ndarray, kc: np.ndarray, ki: np.ndarray,
                 lam: float, sweeps: int = 25, tol: float = 1e-10):
    """Blockwise diagonally scaled proximal steps on the L1-penalised multinomial fit.

    Each accepted step never lowers :func:`kappa_objective`. With a single
    content level only ``kt`` moves.
    """
    kt, kc, ki = kt.copy(), kc.copy(), ki.copy()
    A = E.shape[0]
    T = E.sum(axis=2, keepdims=True)
    blocks = ["t"] if A == 1 else ["t", "c", "i"]
    obj = kappa_objective(E, m, kt, kc, ki, lam)
    for _ in range(sweeps):
        start = obj
        for blk in blocks:
            lin = _lin(m, kt, kc, ki)
            beta = np.exp(lin - logsumexp(lin, axis=2, keepdims=True))
            R = E - T * beta
            H = T * beta
            if blk == "t":
                g, h, cur = R.sum(axis=0), H.sum(axis=0), kt
            elif blk == "c":
                g, h, cur = R.sum(axis=1), H.sum(axis=1), kc
            else:
                g, h, cur = R, H, ki
            h = h + 1e-8
            step = 1.0
            for _ in range(30):
                new = _soft(cur + step * g / h, step * lam / h)
                trial = {"t": kt, "c": kc, "i": ki}
                trial = dict(trial, **{blk: new})
                val = kappa_objective(E, m, trial["t"], trial["c"], trial["i"], lam)
                if val >= obj:
                    break
                step *= 0.5
            else:
                continue
            obj = val
            if blk == "t":
                kt = new
            elif blk == "c":
                kc = new
            else:
                ki = new
        if obj - start <= tol * max(1.0, abs(obj)):
            break
    return kt, kc, ki
