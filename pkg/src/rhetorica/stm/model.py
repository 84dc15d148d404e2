"""Configuration and fitted-parameter containers for the structural topic model."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .. import io as rio

BETA_FLOOR = 1e-12
MODEL_SCHEMA = 1


@dataclass
class StmConfig:
    K: int
    max_em_iters: int = 500
    em_tol: float = 1e-5
    init: str = "spectral"  # or "random"
    init_seed: int = 0
    gamma_max_iters: int = 5000
    # Gamma(shape s, rate r) prior on each topic's prevalence variance
    s_gamma: float = 10.0
    r_gamma: float = 1.0
    # Gamma(s, r) prior on Laplace scales of content deviations; L1 weight r/s
    s_kappa: float = 1.0
    r_kappa: float = 1.0
    newton_max_iters: int = 50
    kappa_sweeps: int = 25
    threads: int = 1

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.em_tol <= 0:
            raise ValueError("em_tol must be > 0")
        if self.max_em_iters < 1:
            raise ValueError("max_em_iters must be >= 1")
        if self.init not in ("spectral", "random"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.s_gamma <= 0 or self.r_gamma < 0 or self.s_kappa <= 0 or self.r_kappa < 0:
            raise ValueError("Gamma hyperparameters must be positive (rates may be 0)")

    @property
    def l1_penalty(self) -> float:
        return self.r_kappa / self.s_kappa

    def to_dict(self) -> dict:
        """Model-defining settings; ``threads`` is left out so artifacts match across thread counts."""
        d = asdict(self)
        d.pop("threads")
        return d


@dataclass
class StmModel:
    K: int
    m: np.ndarray            # (V,)
    kappa_t: np.ndarray      # (K, V)
    kappa_c: np.ndarray      # (A, V)
    kappa_i: np.ndarray      # (A, K, V)
    gamma: np.ndarray        # (P, K-1)
    sigma2: np.ndarray       # (K-1,)
    Sigma: np.ndarray        # (K-1, K-1)
    eta: np.ndarray          # (D, K-1)
    y_levels: list[str] = field(default_factory=lambda: ["all"])
    bound_trace: list[float] = field(default_factory=list)
    converged_at: int | None = None
    config: dict = field(default_factory=dict)

    @property
    def A(self) -> int:
        return self.kappa_c.shape[0]

    @property
    def V(self) -> int:
        return self.m.shape[0]

    @property
    def theta(self) -> np.ndarray:
        return softmax_pad(self.eta)

    def log_beta(self) -> np.ndarray:
        """(A, K, V) log topic-word distributions, floored then renormalised."""
        return log_beta_from(self.m, self.kappa_t, self.kappa_c, self.kappa_i)

    def beta(self) -> np.ndarray:
        return np.exp(self.log_beta())

    def mu(self, X: np.ndarray) -> np.ndarray:
        return X @ self.gamma

    def copy(self) -> "StmModel":
        return StmModel(
            self.K, self.m.copy(), self.kappa_t.copy(), self.kappa_c.copy(), self.kappa_i.copy(),
            self.gamma.copy(), self.sigma2.copy(), self.Sigma.copy(), self.eta.copy(),
            list(self.y_levels), list(self.bound_trace), self.converged_at, dict(self.config))

    def to_artifact(self) -> rio.Artifact:
        arrays = {k: getattr(self, k) for k in
                  ("m", "kappa_t", "kappa_c", "kappa_i", "gamma", "sigma2", "Sigma", "eta")}
        arrays["bound_trace"] = np.asarray(self.bound_trace, dtype=float)
        meta = {"K": self.K, "y_levels": self.y_levels, "converged_at": self.converged_at,
                "config": self.config}
        return rio.Artifact("stm-model", MODEL_SCHEMA, meta, arrays)

    @classmethod
    def from_artifact(cls, art: rio.Artifact) -> "StmModel":
        if art.kind != "stm-model" or art.schema != MODEL_SCHEMA:
            raise rio.ArtifactError(f"not a schema-{MODEL_SCHEMA} model artifact")
        a = art.arrays
        return cls(art.meta["K"], a["m"], a["kappa_t"], a["kappa_c"], a["kappa_i"], a["gamma"],
                   a["sigma2"], a["Sigma"], a["eta"], list(art.meta["y_levels"]),
                   a["bound_trace"].tolist(), art.meta["converged_at"], art.meta["config"])

    def save(self, path: str | Path) -> None:
        rio.save(path, self.to_artifact())

    @classmethod
    def load(cls, path: str | Path) -> "StmModel":
        return cls.from_artifact(rio.load(path, "stm-model"))


def softmax_pad(eta: np.ndarray) -> np.ndarray:
    """softmax of ``eta`` with a fixed 0 appended along the last axis."""
    eta = np.asarray(eta, dtype=float)
    full = np.concatenate([eta, np.zeros(eta.shape[:-1] + (1,))], axis=-1)
    full -= full.max(axis=-1, keepdims=True)
    e = np.exp(full)
    return e / e.sum(axis=-1, keepdims=True)


def log_beta_from(m, kappa_t, kappa_c, kappa_i) -> np.ndarray:
    lin = m[None, None, :] + kappa_t[None, :, :] + kappa_c[:, None, :] + kappa_i
    lb = lin - logsumexp(lin, axis=-1, keepdims=True)
    beta = np.maximum(np.exp(lb), BETA_FLOOR)
    return np.log(beta / beta.sum(axis=-1, keepdims=True))
