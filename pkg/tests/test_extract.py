from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from golden_extract import GOLDEN
from rhetorica.extract import (RelationTriplet, compile_patterns, default_patterns, extract_relations,
                               extract_text, is_nodeal_cause, segment_sentences)
from rhetorica.lexicon import LexiconError, RelType, VerbLexicon, default_lexicon, load_lexicon


def _tuples(sentence):
    return [(r.cause, r.rel_type.value, r.negated, r.passive, r.effect) for r in extract_relations(sentence)]


@pytest.mark.parametrize("sentence,expected,tags", GOLDEN, ids=[g[0][:40] for g in GOLDEN])
def test_golden(sentence, expected, tags):
    assert _tuples(sentence) == expected


def test_golden_covers_every_lexeme_and_form():
    lexemes = {
        "destroy", "demolish", "annihilate", "obliterate", "cancel", "eradicate", "extirpate",
        "eliminate", "wipe out", "wipe off", "kill", "cause", "determine", "engender", "entail",
        "provoke", "trigger", "lead to", "result in", "create", "produce", "originate", "generate", "make",
    }
    tags = {t for _, _, ts in GOLDEN for t in ts}
    assert lexemes <= tags
    assert {"active", "passive", "negated", "coordinated", "end", "which"} <= tags
    assert len(GOLDEN) >= 60


def test_end_form_flag_and_coref():
    (r,) = extract_relations("the chaos that no deal would trigger")
    assert r.end_form and not r.passive
    first, second = extract_relations("No deal will destroy jobs and will kill the economy.")
    assert not first.coref_resolved and second.coref_resolved


def test_rel_ids_and_operator_text():
    rels = extract_text("No deal kills jobs. Tariffs will cause chaos and will destroy trust.", "t9")
    assert [r.rel_id for r in rels] == ["t9.1.1", "t9.2.1", "t9.2.2"]
    assert [r.operator_text for r in rels] == ["kills", "cause", "destroy"]


def test_curly_apostrophe_negation():
    (r,) = extract_relations("No deal won’t create jobs.")
    assert r.negated and r.cause == "No deal"


def test_triplet_roundtrip():
    (r,) = extract_relations("No deal kills jobs.")
    assert RelationTriplet.from_dict(r.to_dict()) == r


@pytest.mark.parametrize("text,expected", [
    ("No deal kills jobs. It is bad.", [("No deal kills jobs.", 0), ("It is bad.", 1)]),
    ("no deal?!", [("no deal?!", 0)]),
    ("", []),
])
def test_segment_sentences(text, expected):
    assert segment_sentences(text) == expected


@pytest.mark.parametrize("cause,expected", [
    ("Which means no deal", True),
    ("no deal at the very last possible minute", False),
    ("No-Deal", True),
    ("a no_deal exit", True),
    ("the ideal outcome", False),
])
def test_nodeal_cause(cause, expected):
    assert is_nodeal_cause(cause) is expected


def test_nodeal_strict_vs_lenient():
    assert is_nodeal_cause("no deal Brexit!!")
    assert is_nodeal_cause("no deal Brexit, sadly", strict=False)
    assert not is_nodeal_cause("no deal Brexit, sadly", strict=True)


def test_lexicon_totality():
    lex = default_lexicon()
    for form, rel, passive in lex.entries():
        assert lex.rel_type(form) is rel
        assert lex.is_passive(form) is passive


def test_every_form_in_a_carrier_keeps_its_type():
    lex = default_lexicon()
    for form, rel, passive in lex.entries():
        rels = extract_relations(f"The border plan {form} small farms.")
        assert rels, form
        assert rels[0].rel_type is rel and rels[0].operator_text == form, form


def test_lexicon_duplicate_rejected(tmp_path):
    p = tmp_path / "lex.toml"
    p.write_text('[active]\nDestruction = ["ruin"]\n[passive]\nCausation = ["ruin"]\n')
    with pytest.raises(LexiconError, match="duplicate form 'ruin'"):
        load_lexicon(p)


def test_custom_lexicon_patterns():
    lex = VerbLexicon({RelType.DESTRUCTION: frozenset({"ruin"})}, {RelType.CAUSATION: frozenset({"ruined by"})})
    pats = compile_patterns(lex)
    (r,) = extract_relations("Farms are ruined by no deal.", lex, pats)
    assert (r.cause, r.rel_type, r.passive) == ("no deal", RelType.CAUSATION, True)


def test_dump_patterns_has_all_names():
    names = set(default_patterns().dump())
    assert {"operator", "passive", "end_form", "nodeal_cause"} <= names


_words = st.sampled_from(["jobs", "farms", "prices", "trust", "growth", "ports", "fish", "wages"])
_subjects = st.sampled_from(["No deal", "A no deal exit", "Tariffs", "The government"])


@settings(max_examples=100, deadline=None)
@given(_subjects, st.lists(_words, min_size=1, max_size=3).map(" ".join))
def test_count_bounded_by_operator_matches(subject, effect):
    pats = default_patterns()
    sentence = f"{subject} will destroy {effect} and cause {effect}."
    assert len(extract_relations(sentence)) <= len(list(pats.operator.finditer(sentence)))


def test_thread_determinism():
    sentences = [s for s, _, _ in GOLDEN] * 5
    serial = [extract_relations(s) for s in sentences]
    with ThreadPoolExecutor(8) as ex:
        parallel = list(ex.map(extract_relations, sentences))
    assert serial == parallel
