"""Effect-side tokenization, document-term matrix and covariate design."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import regex
from scipy import sparse
from scipy.interpolate import BSpline

log = logging.getLogger(__name__)

_URL = regex.compile(r"(?:https?://|www\.)\S+", regex.IGNORECASE)
_MENTION = regex.compile(r"@\w+")
# word tokens keep inner hyphens/apostrophes; each pictographic char is a token
_TOKEN = regex.compile(
    r"[\p{L}\p{N}]+(?:['\-][\p{L}\p{N}]+)*"
    r"|\p{Extended_Pictographic}(?:\p{M}|\u200D\p{Extended_Pictographic}|[\uFE0F\U0001F3FB-\U0001F3FF])*"
)



def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = resources.files("rhetorica.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def raw_tokens(text: str) -> list[str]:
    text = text.replace("’", "'").lower()
    text = _MENTION.sub(" ", _URL.sub(" ", text))
    return _TOKEN.findall(text)


def tokenize_effect(effect: str, stopwords: Iterable[str],
                    bigrams_after_removal: bool = True) -> tuple[list[str], list[str]]:
    """Return ``(unigrams, bigrams)``; a bigram is the two parts joined by a space.

    With ``bigrams_after_removal=False`` bigrams only pair tokens that were
    adjacent in the original text.
    """
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    toks = raw_tokens(effect)
    keep = [t not in stop for t in toks]
    unigrams = [t for t, k in zip(toks, keep) if k]
    if bigrams_after_removal:
        bigrams = [f"{a} {b}" for a, b in zip(unigrams, unigrams[1:])]
    else:
        bigrams = [f"{toks[i]} {toks[i + 1]}" for i in range(len(toks) - 1)
                   if keep[i] and keep[i + 1]]
    return unigrams, bigrams


@dataclass
class Vocabulary:
    tokens: list[str]
    counts: np.ndarray

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def kinds(self) -> list[str]:
        return ["bigram" if " " in t else "unigram" for t in self.tokens]

    @property
    def n_unigrams(self) -> int:
        return sum(" " not in t for t in self.tokens)

    @property
    def n_bigrams(self) -> int:
        return len(self.tokens) - self.n_unigrams


@dataclass
class CorpusMatrix:
    counts: sparse.csr_matrix
    doc_ids: list[str]
    dropped: list[str] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape


class EmptyCorpusError(ValueError):
    pass


def build_matrix(docs: Sequence[Sequence[str]], min_count: int = 10,
                 doc_ids: Sequence[str] | None = None) -> tuple[Vocabulary, CorpusMatrix]:
    """Count tokens, prune rare ones and drop documents left empty."""
    if not docs:
        raise ValueError("build_matrix needs at least one document")
    if doc_ids is None:
        doc_ids = [str(i) for i in range(len(docs))]
    total = Counter(t for doc in docs for t in doc)
    tokens = sorted(t for t, c in total.items() if c >= min_count)
    index = {t: i for i, t in enumerate(tokens)}

    rows, cols, vals, kept, dropped = [], [], [], [], []
    for did, doc in zip(doc_ids, docs):
        c = Counter(index[t] for t in doc if t in index)
        if not c:
            dropped.append(did)
            continue
        r = len(kept)
        for j in sorted(c):
            rows.append(r)
            cols.append(j)
            vals.append(c[j])
        kept.append(did)
    if not kept:
        raise EmptyCorpusError("empty corpus")
    if dropped:
        log.info("dropped %d documents emptied by pruning (min_count=%d)", len(dropped), min_count)

    counts = sparse.csr_matrix(
        (np.asarray(vals, dtype=np.int64), (rows, cols)), shape=(len(kept), len(tokens)))
    vocab = Vocabulary(tokens, np.asarray(counts.sum(axis=0)).ravel().astype(np.int64))
    return vocab, CorpusMatrix(counts, list(kept), dropped)


def bspline_basis(x: np.ndarray, df: int, degree: int = 3) -> np.ndarray:
    """Full B-spline basis on [0, 1] with ``df`` columns and uniform interior knots.

    Rows are non-negative and sum to one for every ``x`` in [0, 1].
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    if df < 1:
        raise ValueError("spline_df must be >= 1")
    degree = min(degree, df - 1)
    n_inner = df - degree - 1
    inner = np.linspace(0.0, 1.0, n_inner + 2)[1:-1]
    knots = np.concatenate([np.zeros(degree + 1), inner, np.ones(degree + 1)])
    basis = BSpline.design_matrix(x, knots, degree).toarray()
    return basis


@dataclass
class CovariateDesign:
    X: np.ndarray
    Y: np.ndarray
    y_levels: list[str]
    columns: list[str]
    day_range: tuple[int, int] = (0, 0)

    @property
    def P(self) -> int:
        return self.X.shape[1]


def _day_number(d) -> int:
    if d is None:
        return 0
    if isinstance(d, str):
        d = date.fromisoformat(d)
    if isinstance(d, date):
        return d.toordinal()
    return int(d)


def build_design(triplets: Sequence, spline_df: int = 10) -> CovariateDesign:
    """Prevalence design ``rel.type + neg + fct + s(t)`` and content factor ``fct``.

    Reference levels are Causation, not negated and Other.
    """
    n = len(triplets)
    rel = [getattr(t.rel_type, "value", t.rel_type) for t in triplets]
    neg = np.array([bool(t.negated) for t in triplets], dtype=float)
    fct = [t.faction or "Other" for t in triplets]
    days = np.array([_day_number(t.day) for t in triplets], dtype=np.int64)

    cols = ["(Intercept)", "rel.typeCreation", "rel.typeDestruction", "negTRUE",
            "fctBrexiteer", "fctRemainer"]
    X = np.zeros((n, 6 + spline_df))
    X[:, 0] = 1.0
    X[:, 1] = [r == "Creation" for r in rel]
    X[:, 2] = [r == "Destruction" for r in rel]
    X[:, 3] = neg
    X[:, 4] = [f == "Brexiteer" for f in fct]
    X[:, 5] = [f == "Remainer" for f in fct]
    if n and len(set(fct)) == 1:
        log.warning("all documents share faction %r: faction columns are constant", fct[0])

    lo, hi = (int(days.min()), int(days.max())) if n else (0, 0)
    if hi > lo:
        t = (days - lo) / (hi - lo)
    else:
        # constant basis, absorbed by the intercept
        log.warning("single-day corpus: time spline reduces to the intercept")
        t = np.zeros(n)
    X[:, 6:] = bspline_basis(t, spline_df) if n else np.zeros((0, spline_df))
    cols += [f"s(t){i + 1}" for i in range(spline_df)]

    levels = [lv for lv in ("Brexiteer", "Remainer", "Other") if lv in set(fct)]
    code = {lv: i for i, lv in enumerate(levels)}
    Y = np.array([code[f] for f in fct], dtype=np.int64)
    return CovariateDesign(X, Y, levels, cols, (lo, hi))


def effect_documents(triplets: Sequence, stopwords: Iterable[str],
                     bigrams_after_removal: bool = True) -> list[list[str]]:
    stop = frozenset(stopwords)
    docs = []
    for t in triplets:
        uni, bi = tokenize_effect(t.effect, stop, bigrams_after_removal)
        docs.append(uni + bi)
    return docs
