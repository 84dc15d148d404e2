"""Topic correlation networks: estimation, sparsification, filtration, triangle balance."""

from __future__ import annotations

import itertools
import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import networkx as nx
import numpy as np
from scipy.stats import norm

from .stm.model import StmModel, softmax_pad

log = logging.getLogger(__name__)


def _cov2cor(C: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.diag(C))
    with np.errstate(invalid="ignore", divide="ignore"):
        R = C / np.outer(d, d)
    R[~np.isfinite(R)] = 0.0
    np.fill_diagonal(R, 1.0)
    return np.clip(R, -1.0, 1.0)


def topic_correlations(model: StmModel, X: np.ndarray | None = None, method: str = "montecarlo",
                       draws: int = 10_000, seed: int = 0) -> np.ndarray:
    """K x K correlation of topic proportions implied by the logistic-normal prior.

    ``montecarlo`` samples ``eta ~ N(mu_d, Sigma)`` for documents drawn at
    random from the corpus, maps to proportions and correlates them.
    ``logit`` rescales Sigma itself (padded with the pinned reference topic,
    which gets zero correlation with everything).
    """
    Sigma = np.asarray(model.Sigma)
    try:
        np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        raise ValueError("Sigma is not positive definite") from None
    K = model.K
    if method == "logit":
        C = np.zeros((K, K))
        C[:K - 1, :K - 1] = Sigma
        return _cov2cor(C)
    if method != "montecarlo":
        raise ValueError(f"unknown correlation method {method!r}")
    rng = np.random.default_rng(seed)
    if X is None:
        mu = np.zeros((draws, K - 1))
    else:
        mu = (np.asarray(X) @ model.gamma)[rng.integers(0, len(X), draws)]
    eta = mu + rng.standard_normal((draws, K - 1)) @ np.linalg.cholesky(Sigma).T
    theta = softmax_pad(eta)
    return _cov2cor(np.cov(theta, rowvar=False))


def mb_penalty(n: int, p: int, alpha: float) -> float:
    """Neighbourhood-selection penalty for standardized columns at level ``alpha``."""
    return 2.0 / np.sqrt(n) * norm.isf(alpha / (2.0 * p * p))


def neighbourhoods(samples: np.ndarray, alpha: float = 0.05) -> np.ndarray:
    """Boolean p x p matrix; row j marks the variables selected when regressing j on the rest."""
    from sklearn.exceptions import ConvergenceWarning
    from sklearn.linear_model import Lasso

    Z = np.asarray(samples, dtype=float)
    n, p = Z.shape
    sd = Z.std(axis=0)
    const = sd <= 1e-12
    for j in np.flatnonzero(const):
        log.warning("topic %d has a constant column; it stays isolated", j + 1)
    Z = np.where(const, 0.0, (Z - Z.mean(axis=0)) / np.where(const, 1.0, sd))
    lam = mb_penalty(n, p, alpha)
    sel = np.zeros((p, p), dtype=bool)
    for j in range(p):
        if const[j]:
            continue
        others = [i for i in range(p) if i != j and not const[i]]
        if not others:
            continue
        # sklearn minimises 1/(2n)||y - Xb||^2 + a||b||_1
        model = Lasso(alpha=lam / 2.0, fit_intercept=False, max_iter=10_000, tol=1e-8)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            model.fit(Z[:, others], Z[:, j])
        for i, b in zip(others, model.coef_):
            sel[j, i] = b != 0.0
    return sel


def sparsify(corr: np.ndarray, samples: np.ndarray, alpha: float = 0.05,
             labels: dict | None = None) -> nx.Graph:
    """Correlation graph restricted to edges chosen in both neighbourhood regressions."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    corr = np.asarray(corr)
    p = corr.shape[0]
    if samples.shape[1] != p:
        raise ValueError("samples and correlation matrix disagree on the number of topics")
    sel = neighbourhoods(samples, alpha)
    keep = sel & sel.T
    g = nx.Graph(threshold=0.0, method="mb-and", alpha=alpha)
    for k in range(p):
        g.add_node(k + 1, **node_attrs(labels, k))
    for i, j in itertools.combinations(range(p), 2):
        if keep[i, j] and corr[i, j] != 0:
            g.add_edge(i + 1, j + 1, weight=float(corr[i, j]))
    return g


def full_graph(corr: np.ndarray, labels: dict | None = None) -> nx.Graph:
    p = corr.shape[0]
    g = nx.Graph(threshold=0.0, method="none")
    for k in range(p):
        g.add_node(k + 1, **node_attrs(labels, k))
    for i, j in itertools.combinations(range(p), 2):
        if corr[i, j] != 0:
            g.add_edge(i + 1, j + 1, weight=float(corr[i, j]))
    return g


def node_attrs(labels: dict | None, k: int) -> dict:
    if not labels:
        return {"verb_type": "", "faction_type": "", "negation_flag": "", "order": k + 1}
    return {key: ("" if vals[k] is None else vals[k]) for key, vals in labels.items()}


def filtrate(g: nx.Graph, thresholds: list[float]) -> list[nx.Graph]:
    """One graph per threshold: edges with |w| >= t, isolated nodes removed."""
    if any(not 0 < t <= 1 for t in thresholds):
        raise ValueError("thresholds must lie in (0, 1]")
    if list(thresholds) != sorted(thresholds, reverse=True):
        raise ValueError("thresholds must be in descending order")
    out = []
    for t in thresholds:
        h = nx.Graph(**{**g.graph, "threshold": t})
        for u, v, d in g.edges(data=True):
            if abs(d["weight"]) >= t:
                h.add_node(u, **g.nodes[u])
                h.add_node(v, **g.nodes[v])
                h.add_edge(u, v, **d)
        out.append(h)
    return out


@dataclass
class Triangle:
    nodes: tuple
    signs: tuple[int, int, int]
    balanced: bool


@dataclass
class TriangleReport:
    triangles: list[Triangle]

    @property
    def n_balanced(self) -> int:
        return sum(t.balanced for t in self.triangles)

    @property
    def n_imbalanced(self) -> int:
        return len(self.triangles) - self.n_balanced


def balance_table(S: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classify every node triple of one or many signed adjacency matrices.

    ``S`` has shape (..., n, n) with entries in {-1, 0, +1}, 0 meaning no edge.
    Returns the (T, 3) triples in lexicographic order and two (..., T) masks:
    triangle present, and triangle balanced (an odd number of positive edges).
    """
    S = np.asarray(S)
    n = S.shape[-1]
    tri = np.array(list(itertools.combinations(range(n), 3)), dtype=np.intp).reshape(-1, 3)
    ab = S[..., tri[:, 0], tri[:, 1]]
    bc = S[..., tri[:, 1], tri[:, 2]]
    ac = S[..., tri[:, 0], tri[:, 2]]
    present = (ab != 0) & (bc != 0) & (ac != 0)
    n_pos = (ab > 0).astype(np.int8) + (bc > 0) + (ac > 0)
    return tri, present, present & (n_pos % 2 == 1)


def triangle_balance(g: nx.Graph) -> TriangleReport:
    """Balanced iff the triangle has an odd number of positive edges."""
    nodes = sorted(g.nodes)
    pos = {v: i for i, v in enumerate(nodes)}
    S = np.zeros((len(nodes), len(nodes)), dtype=np.int8)
    for u, v, w in g.edges(data="weight"):
        S[pos[u], pos[v]] = S[pos[v], pos[u]] = 1 if w > 0 else -1
    tri, present, balanced = balance_table(S)
    out = []
    for t in np.flatnonzero(present):
        a, b, c = tri[t]
        signs = (int(S[a, b]), int(S[b, c]), int(S[a, c]))
        out.append(Triangle((nodes[a], nodes[b], nodes[c]), signs, bool(balanced[t])))
    return TriangleReport(out)


def graph_to_json(g: nx.Graph) -> dict:
    return {
        "graph": dict(g.graph),
        "nodes": [{"id": n, **g.nodes[n]} for n in sorted(g.nodes)],
        "edges": [{"source": u, "target": v, "weight": d["weight"],
                   "sign": 1 if d["weight"] > 0 else -1}
                  for u, v, d in sorted(g.edges(data=True), key=lambda e: (min(e[:2]), max(e[:2])))],
    }


def graph_from_json(doc: dict) -> nx.Graph:
    g = nx.Graph(**doc.get("graph", {}))
    for n in doc["nodes"]:
        attrs = dict(n)
        g.add_node(attrs.pop("id"), **attrs)
    for e in doc["edges"]:
        g.add_edge(e["source"], e["target"], weight=e["weight"])
    return g


def export_graph(g: nx.Graph, stem: str | Path) -> None:
    """Write ``<stem>.graphml`` and ``<stem>.json``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    # append rather than with_suffix: stems such as "corr_t0.14" contain dots
    h = nx.Graph(**{k: v for k, v in g.graph.items() if v is not None})
    for n in sorted(g.nodes):
        h.add_node(n, **g.nodes[n])
    for u, v, d in sorted(g.edges(data=True), key=lambda e: (min(e[:2]), max(e[:2]))):
        h.add_edge(u, v, weight=d["weight"], sign=1 if d["weight"] > 0 else -1)
    nx.write_graphml(h, stem.parent / (stem.name + ".graphml"))
    (stem.parent / (stem.name + ".json")).write_text(
        json.dumps(graph_to_json(g), sort_keys=True, indent=1) + "\n", encoding="utf-8")
