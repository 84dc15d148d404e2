"""Per-topic phrase networks with a partisan difference overlay."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .stm.model import StmModel

log = logging.getLogger(__name__)


def percentile_keep(w: np.ndarray, p: float, value_based: bool = False) -> np.ndarray:
    """Mask of elements at or above the ``p`` percentile.

    By rank, the cut value is the first sorted element whose share of
    predecessors is at least ``p``; everything tied with it is kept too.
    """
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return np.zeros(0, dtype=bool)
    if value_based:
        return w >= np.quantile(w, p)
    ranks = np.arange(w.size) / w.size
    idx = np.flatnonzero(ranks >= p)
    if idx.size == 0:
        return np.zeros(w.size, dtype=bool)
    return w >= np.sort(w)[idx[0]]


def content_weights(model: StmModel, k: int, level: int) -> np.ndarray:
    return np.exp(model.m + model.kappa_t[k] + model.kappa_c[level] + model.kappa_i[level, k])


def delta(model: StmModel, k: int, i: int, j: int, literal: bool = False) -> np.ndarray:
    """Difference of faction-specific token weights, ``i`` minus ``j``.

    ``literal=True`` reproduces the published expression: no topic term and a
    negated faction deviation in the second exponent.
    """
    if literal:
        return (np.exp(model.m + model.kappa_c[i] + model.kappa_i[i, k])
                - np.exp(model.m - model.kappa_c[j] + model.kappa_i[j, k]))
    return content_weights(model, k, i) - content_weights(model, k, j)


@dataclass
class NarrativeGraph:
    topic: int
    nodes: dict[str, dict] = field(default_factory=dict)      # token -> {weight, delta}
    edges: dict[tuple[str, str], dict] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "topic": self.topic,
            "nodes": [{"id": t, **self.nodes[t]} for t in sorted(self.nodes)],
            "edges": [{"source": u, "target": v, **self.edges[(u, v)]} for u, v in sorted(self.edges)],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "NarrativeGraph":
        g = cls(doc["topic"])
        for n in doc["nodes"]:
            n = dict(n)
            g.nodes[n.pop("id")] = n
        for e in doc["edges"]:
            e = dict(e)
            g.edges[(e.pop("source"), e.pop("target"))] = e
        return g

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph(topic=self.topic)
        for t in sorted(self.nodes):
            g.add_node(t, **self.nodes[t])
        for (u, v) in sorted(self.edges):
            g.add_edge(u, v, **self.edges[(u, v)])
        return g


def _level(model: StmModel, name: str) -> int:
    try:
        return model.y_levels.index(name)
    except ValueError:
        raise ValueError(f"content covariate has no level {name!r} (levels: {model.y_levels})") from None


def build_narrative(model: StmModel, vocab: list[str], topic: int, percentile: float = 0.80,
                    baseline: str = "Other", pair: tuple[str, str] = ("Brexiteer", "Remainer"),
                    literal: bool = False, value_based: bool = False) -> NarrativeGraph:
    """Unigram nodes and bigram edges above the percentile of the baseline faction's weights.

    ``topic`` is 1-based.
    """
    if not 1 <= topic <= model.K:
        raise ValueError(f"topic {topic} out of range 1..{model.K}")
    if not 0 <= percentile < 1:
        raise ValueError("percentile must lie in [0, 1)")
    if len(vocab) != model.V:
        raise ValueError("vocabulary does not match the model")
    k = topic - 1
    base = _level(model, baseline)
    i, j = (_level(model, name) for name in pair)
    w = content_weights(model, k, base)
    d = delta(model, k, i, j, literal)
    is_bigram = np.array([" " in t for t in vocab])
    uni = np.flatnonzero(~is_bigram)
    bi = np.flatnonzero(is_bigram)
    g = NarrativeGraph(topic)
    for idx in uni[percentile_keep(w[uni], percentile, value_based)]:
        g.nodes[vocab[idx]] = {"weight": float(w[idx]), "delta": float(d[idx])}
    for idx in bi[percentile_keep(w[bi], percentile, value_based)]:
        a, b = vocab[idx].split(" ", 1)
        if a in g.nodes and b in g.nodes:
            g.edges[(a, b)] = {"weight": float(w[idx]), "delta": float(d[idx])}
    if not g.edges:
        log.warning("topic %d: no bigram survives the %.2f percentile filter", topic, percentile)
    return g


def export_narrative(g: NarrativeGraph, path: str | Path) -> None:
    """Write JSON (``.json``) or GraphML (any other suffix)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".json":
        path.write_text(json.dumps(g.to_json(), sort_keys=True, indent=1) + "\n", encoding="utf-8")
    else:
        nx.write_graphml(g.to_networkx(), path)


def import_narrative(path: str | Path) -> NarrativeGraph:
    return NarrativeGraph.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
