"""Verb-anchored cause/effect relation extraction.

The parser works sentence by sentence:

1. end-of-sentence constructions ("EFFECT that CAUSE <verb>") are carved out
   of their clause first;
2. the rest of the sentence is split at every causal operator (passive forms
   win at a shared start position, longer forms win over shorter ones);
3. each fragment loses trailing negated modals (setting ``negated``), bare
   modals and auxiliaries, coordination markers and trailing "which"/"that";
4. fragments are paired around each operator, inverted for passive operators,
   with coordinated/relative clauses borrowing the cause of an earlier
   fragment.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from datetime import date
from typing import Iterable

import regex

from .lexicon import RelType, VerbLexicon, default_lexicon, normalize_form

log = logging.getLogger(__name__)

_L = r"\p{L}\p{M}_-"
LEFT = rf"(?<![{_L}])"
RIGHT = rf"(?![{_L}])"
# POSIX [[:punct:]] is ASCII-only; emojis must survive trimming.
PUNCT = r"!-/:-@\[-`{-~"
_TRIM = regex.compile(rf"^[{PUNCT}\s]+|[{PUNCT}\s]+$")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'"})

# Trailing negated auxiliaries. "did't" is kept next to its evident intent.
NEGATED_MODALS = [
    "had not had to", "do not have to", "does not have to", "not having to",
    "did not have to", "were not having to", "will not have to", "have not had to",
    "has not had to", "have not been having to", "had not been having to",
    "will not have had to", "would not have to", "would not have had to",
    "don't have to", "doesn't have to", "aren't having to", "isn't having to",
    "didn't have to", "wasn't having to", "weren't having to", "won't have to",
    "haven't had to", "hasn't had to", "haven't been having to", "hadn't had to",
    "hadn't been having to", "won't have had to", "wouldn't have to",
    "wouldn't have had to", "shouldn't have to", "shouldn't have had to",
    "should not have to", "should not have had to", "may not have to",
    "may not have had to", "have not", "haven't", "had not", "hadn't", "hasn't",
    "isn't", "aren't", "is not", "am not", "are not", "was not", "wasn't",
    "were not", "weren't", "will not", "won't", "wont", "doesn't", "don't", "dont",
    "didn't", "did't", "wouldn't", "shan't", "shouldn't", "could not", "couldn't",
    "would not", "should not", "may not", "can't", "cannot", "might not",
    "mustn't", "must not", "shall not", "ought not to", "not", "other than",
]

# "X ([a-z]{4,} ) Y" leaves room for one adverb inside the modal phrase.
_ADV_SLOT = "([a-z]{4,} ){1}"
MODALS = [
    f"had {_ADV_SLOT}had to", f"do {_ADV_SLOT}have to", f"does {_ADV_SLOT}have to",
    f"having {_ADV_SLOT}to", f"did {_ADV_SLOT}have to", f"were {_ADV_SLOT}having to",
    f"will {_ADV_SLOT}have to", f"have {_ADV_SLOT}had to", f"has {_ADV_SLOT}had to",
    f"have {_ADV_SLOT}been having to", f"had {_ADV_SLOT}been having to",
    f"will {_ADV_SLOT}have had to", f"would {_ADV_SLOT}have to",
    f"would {_ADV_SLOT}have had to", f"are {_ADV_SLOT}having to",
    f"is {_ADV_SLOT}having to", f"was {_ADV_SLOT}having to", f"ought {_ADV_SLOT}to",
    "had had to", "do have to", "does have to", "having to", "did have to",
    "were having to", "will have to", "have had to", "has had to",
    "have been having to", "had been having to", "will have had to",
    "would have to", "would have had to", "are having to", "is having to",
    "was having to", "have", "had", "has", "is", "are", "am", "was", "were",
    "will", "could", "would", "should", "may", "can", "might", "must", "shall",
    "ought to",
    # passive auxiliaries ("Y will be caused by X")
    "be", "been", "being",
]

_COORD = (
    "and also|but also|also|while|as well as|"
    "but[[:punct:][:space:]]+meanwhile|and[[:punct:][:space:]]+meanwhile|meanwhile|"
    "but[[:punct:][:space:]]+at the same time|and[[:punct:][:space:]]+at the same time|"
    "at the same time|"
    "and[[:punct:][:space:]]+simultaneously|but[[:punct:][:space:]]+simultaneously|"
    "simultaneously|"
    "and[[:punct:][:space:]]+concurrently|but[[:punct:][:space:]]+concurrently|concurrently|"
    "and[[:punct:][:space:]]+jointly|but[[:punct:][:space:]]+jointly|jointly|but|and"
)
AND_REGEX = (
    rf"[[:punct:][:space:]]+(?:{_COORD})+[[:punct:][:space:]]*"
    r"(?:I|you|he|she|it|we|they)*[[:punct:][:space:]]*$"
)
WHICH_REGEX = r"which\s*$"
WHICH_THAT_REGEX = r"which\s*$|that\s*$"

END_FORM_TAIL = (
    " in | on | since | at | during | to | for | while | throughout | all-over "
    "| all over | inside |  outside | everywhere "
)

NODEAL_STRICT = r"[Nn][Oo][-_\s][Dd][Ee][Aa][lL][\"'?>]?(?:\s+[A-Za-z_]+){0,3}[\s!-/:-@\[-`{-~]*$"
NODEAL_LENIENT = (
    rf"{LEFT}[Nn][Oo][-_\s][Dd][Ee][Aa][lL]{RIGHT}[\"'?>]?"
    rf"(?:\s+[^\s]+){{0,3}}[\s{PUNCT}]*$"
)


def _alternation(forms: Iterable[str]) -> str:
    # longest first so that "caused by" beats "caused" and "wipes out" beats nothing shorter
    ordered = sorted(set(forms), key=lambda f: (-len(f), f))
    return "|".join(r"\s+".join(regex.escape(w) for w in f.split()) for f in ordered)


def _trailing(alts: list[str]) -> str:
    body = "|".join(alts)
    return rf"{LEFT}(?:{body})(?:\s+\w+ly)?\s*$"


@dataclass(frozen=True)
class PatternSet:
    """Compiled extraction patterns; immutable and safe to share across threads."""

    operator: regex.Pattern
    passive: regex.Pattern
    end_form: regex.Pattern
    and_regex: regex.Pattern
    which_regex: regex.Pattern
    which_that_regex: regex.Pattern
    modals: regex.Pattern
    negated_modals: regex.Pattern
    nodeal_cause: regex.Pattern
    nodeal_cause_strict: regex.Pattern
    has_content: regex.Pattern = field(default=regex.compile(r"[^:;,!]{4,}"))

    def dump(self) -> dict[str, str]:
        return {
            name: getattr(self, name).pattern
            for name in (
                "operator", "passive", "end_form", "and_regex", "which_regex",
                "which_that_regex", "modals", "negated_modals", "nodeal_cause",
                "nodeal_cause_strict",
            )
        }


def compile_patterns(lex: VerbLexicon | None = None) -> PatternSet:
    lex = lex or default_lexicon()
    flags = regex.IGNORECASE | regex.V0
    passive_alt = _alternation(lex.passive_forms())
    active_alt = _alternation(lex.active_forms())
    operator = regex.compile(
        rf"{LEFT}(?:(?P<passive>{passive_alt})|(?P<active>{active_alt})){RIGHT}", flags
    )
    tail = "|".join(f"{t}[^:;,!]{{2,}}" for t in END_FORM_TAIL.split("|"))
    end_form = regex.compile(
        r"(?P<effect>[^:;,!]{2,})(?P<connector> that | which |,which )"
        rf"(?P<cause>[^:;,!]{{2,}}){LEFT}(?P<rel_operator>{_alternation(lex.end_forms())}){RIGHT}"
        rf"(?P<effect_end>(?:{tail})*)[{PUNCT}]*\s*$",
        flags,
    )
    return PatternSet(
        operator=operator,
        passive=regex.compile(rf"{LEFT}(?:{passive_alt}){RIGHT}", flags),
        end_form=end_form,
        and_regex=regex.compile(AND_REGEX, flags),
        which_regex=regex.compile(WHICH_REGEX, flags),
        which_that_regex=regex.compile(WHICH_THAT_REGEX, flags),
        modals=regex.compile(_trailing(MODALS), flags),
        negated_modals=regex.compile(_trailing([regex.escape(m) for m in NEGATED_MODALS]), flags),
        nodeal_cause=regex.compile(NODEAL_LENIENT),
        nodeal_cause_strict=regex.compile(NODEAL_STRICT),
    )


_DEFAULT_PATTERNS: PatternSet | None = None


def default_patterns() -> PatternSet:
    global _DEFAULT_PATTERNS
    if _DEFAULT_PATTERNS is None:
        _DEFAULT_PATTERNS = compile_patterns()
    return _DEFAULT_PATTERNS


@dataclass
class RelationTriplet:
    rel_id: str
    cause: str
    effect: str
    rel_type: RelType
    negated: bool
    passive: bool
    coref_resolved: bool
    end_form: bool
    operator_text: str
    faction: str | None = None
    day: date | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rel_type"] = self.rel_type.value
        d["day"] = self.day.isoformat() if self.day else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RelationTriplet":
        d = dict(d)
        d["rel_type"] = RelType(d["rel_type"])
        if d.get("day"):
            d["day"] = date.fromisoformat(d["day"])
        return cls(**d)


# sentence segmentation --------------------------------------------------------

_SENT_END = regex.compile(r"(?:[?!]+[.?!]*|\.+[?!.]*)[\"'”’)\]]*(?=\s|$)")


def segment_sentences(text: str) -> list[tuple[str, int]]:
    """Split ``text`` at terminal punctuation and line breaks.

    A period followed by a lowercase word ("the U.K. economy") does not end a
    sentence; "?" and "!" always do.
    """
    sentences: list[str] = []
    for line in text.splitlines():
        start = 0
        for m in _SENT_END.finditer(line):
            nxt = line[m.end():].lstrip()
            if m.group().startswith(".") and "?" not in m.group() and "!" not in m.group():
                if nxt[:1].islower():
                    continue
            chunk = line[start:m.end()].strip()
            if chunk:
                sentences.append(chunk)
            start = m.end()
        rest = line[start:].strip()
        if rest:
            sentences.append(rest)
    return [(s, i) for i, s in enumerate(sentences)]


# fragment cleaning ------------------------------------------------------------


def _trim(text: str) -> str:
    return _TRIM.sub("", text)


@dataclass
class _Fragment:
    raw: str
    text: str
    negated: bool
    coordinated: bool
    relative: bool


def strip_auxiliaries(text: str, pats: PatternSet) -> tuple[str, bool]:
    """Strip trailing (negated) modal and auxiliary phrases; report negation."""
    negated = False
    text = text.rstrip()
    while text:
        m = pats.negated_modals.search(text)
        if m:
            negated = True
        else:
            m = pats.modals.search(text)
            if not m:
                break
        text = text[: m.start()].rstrip()
    return text, negated


def _clean(raw: str, pats: PatternSet) -> _Fragment:
    text = _trim(raw)
    text, negated = strip_auxiliaries(text, pats)
    coordinated = bool(pats.and_regex.search(text))
    text = pats.and_regex.sub("", text)
    relative = bool(pats.which_regex.search(text))
    text = pats.which_that_regex.sub("", text)
    return _Fragment(raw=_trim(raw), text=_trim(text), negated=negated,
                     coordinated=coordinated, relative=relative)


# extraction -------------------------------------------------------------------


@dataclass
class _Relation:
    cause: str
    effect: str
    operator: str
    negated: bool
    passive: bool
    coref: bool
    end_form: bool


def _usable(frag_raw: str, text: str) -> bool:
    return len(frag_raw) >= 4 and bool(text)


def _end_forms(sentence: str, pats: PatternSet, lex: VerbLexicon) -> tuple[list[_Relation], str]:
    """Pull end-of-sentence relations out; return them plus the remaining text."""
    clauses = regex.split(r"(?<=[;:,?!.])", sentence)
    clauses = [c for c in clauses if c]
    found: list[_Relation] = []
    keep: list[str] = []
    for clause in clauses:
        m = pats.end_form.search(clause)
        if not m:
            keep.append(clause)
            continue
        cause, negated = strip_auxiliaries(_trim(m.group("cause")), pats)
        cause = _trim(cause)
        effect = _trim(m.group("effect") + m.group("effect_end"))
        op = normalize_form(m.group("rel_operator"))
        if _usable(_trim(m.group("cause")), cause) and _usable(effect, effect):
            found.append(_Relation(cause, effect, op, negated, False, False, True))
    if not found:
        return [], sentence
    return found, "".join(keep) if len(clauses) > 1 else ""


def _pair(frags: list[_Fragment], ops: list[tuple[str, bool]], pats: PatternSet) -> list[_Relation]:
    out = []
    for j, (op, passive) in enumerate(ops):
        before, after = j, j + 1
        coref = False
        if j >= 1:
            backref = frags[j].coordinated or frags[j - 1].relative
            if not passive and backref:
                cands = [m for m in range(j) if not frags[m].coordinated and not frags[m].relative]
                before = cands[-1] if cands else 0
                coref = True
            elif passive and j == 1 and backref:
                before = 0
                coref = True
            elif passive and j > 1 and frags[j - 1].relative:
                cands = [m for m in range(j) if not frags[m].relative]
                before = cands[-1] if cands else 0
                coref = True
        if passive:
            cause_frag, effect_frag = frags[after], frags[before]
        else:
            cause_frag, effect_frag = frags[before], frags[after]
        if not (_usable(cause_frag.raw, cause_frag.text) and _usable(effect_frag.raw, effect_frag.text)):
            continue
        out.append(_Relation(cause_frag.text, effect_frag.text, op, frags[j].negated,
                             passive, coref, False))
    return out


def _extract(sentence: str, lex: VerbLexicon, pats: PatternSet) -> list[_Relation]:
    sentence = sentence.translate(_APOSTROPHES)
    if not pats.operator.search(sentence):
        return []
    rels, rest = _end_forms(sentence, pats, lex)
    if rest and pats.has_content.search(rest):
        matches = list(pats.operator.finditer(rest))
        if matches:
            pieces, ops, pos = [], [], 0
            for m in matches:
                pieces.append(rest[pos:m.start()])
                ops.append((normalize_form(m.group()), m.group("passive") is not None))
                pos = m.end()
            pieces.append(rest[pos:])
            frags = [_clean(p, pats) for p in pieces]
            rels.extend(_pair(frags, ops, pats))
    return rels


def extract_relations(
    sentence: str,
    lex: VerbLexicon | None = None,
    pats: PatternSet | None = None,
    *,
    prefix: str = "",
) -> list[RelationTriplet]:
    """Extract relation triplets from one sentence.

    ``faction`` and ``day`` are left unset; ``rel_id`` is ``prefix`` followed by
    the 1-based relation index.
    """
    lex = lex or default_lexicon()
    pats = pats or (default_patterns() if lex is default_lexicon() else compile_patterns(lex))
    out = []
    for i, r in enumerate(_extract(sentence, lex, pats), start=1):
        out.append(RelationTriplet(
            rel_id=f"{prefix}{i}",
            cause=r.cause,
            effect=r.effect,
            rel_type=lex.rel_type(r.operator),
            negated=r.negated,
            passive=r.passive,
            coref_resolved=r.coref,
            end_form=r.end_form,
            operator_text=r.operator,
        ))
    return out


def extract_text(
    text: str,
    doc_id: str,
    lex: VerbLexicon | None = None,
    pats: PatternSet | None = None,
) -> list[RelationTriplet]:
    """Segment ``text`` and extract from every sentence; ids are ``doc.sent.rel``."""
    out = []
    for sentence, idx in segment_sentences(text):
        out.extend(extract_relations(sentence, lex, pats, prefix=f"{doc_id}.{idx + 1}."))
    return out


def is_nodeal_cause(cause: str, pats: PatternSet | None = None, *, strict: bool = False) -> bool:
    """True when "no deal" (any of "no deal", "no-deal", "no_deal") sits in the
    last four tokens of ``cause``.

    The lenient default lets trailing tokens carry attached punctuation;
    ``strict`` only accepts purely alphabetic trailing tokens.
    """
    pats = pats or default_patterns()
    rx = pats.nodeal_cause_strict if strict else pats.nodeal_cause
    return bool(rx.search(cause.translate(_APOSTROPHES)))
