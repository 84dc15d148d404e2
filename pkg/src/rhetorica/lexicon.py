"""Causal verb lexicon: surface forms grouped by relation type and verbal voice."""

from __future__ import annotations

import enum
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib


class RelType(str, enum.Enum):
    CREATION = "Creation"
    CAUSATION = "Causation"
    DESTRUCTION = "Destruction"


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class VerbLexicon:
    """Verb forms keyed by :class:`RelType`.

    ``active`` forms read ``CAUSE <verb> EFFECT``; ``passive`` forms read
    ``EFFECT <verb> CAUSE``. ``end_form_exclude`` lists active forms that may not
    close an end-of-sentence construction.
    """

    active: dict[RelType, frozenset[str]]
    passive: dict[RelType, frozenset[str]]
    end_form_exclude: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        problems = lexicon_problems(self)
        if problems:
            raise LexiconError("; ".join(problems))

    def rel_type(self, operator: str) -> RelType:
        form = normalize_form(operator)
        for table in (self.passive, self.active):
            for rel, forms in table.items():
                if form in forms:
                    return rel
        raise KeyError(f"operator {operator!r} is not in the lexicon")

    def is_passive(self, operator: str) -> bool:
        form = normalize_form(operator)
        return any(form in forms for forms in self.passive.values())

    def active_forms(self) -> list[str]:
        return sorted(f for forms in self.active.values() for f in forms)

    def passive_forms(self) -> list[str]:
        return sorted(f for forms in self.passive.values() for f in forms)

    def end_forms(self) -> list[str]:
        return [f for f in self.active_forms() if f not in self.end_form_exclude]

    def entries(self) -> list[tuple[str, RelType, bool]]:
        """All ``(form, rel_type, is_passive)`` triples in a stable order."""
        out = []
        for passive, table in ((False, self.active), (True, self.passive)):
            for rel in RelType:
                out.extend((f, rel, passive) for f in sorted(table.get(rel, ())))
        return out


def normalize_form(text: str) -> str:
    return " ".join(text.lower().split())


def lexicon_problems(lex: VerbLexicon) -> list[str]:
    """Return human-readable problems (duplicates, non-lowercase forms)."""
    problems = []
    seen: dict[str, str] = {}
    for voice, table in (("active", lex.active), ("passive", lex.passive)):
        for rel, forms in table.items():
            for form in sorted(forms):
                if form != form.lower():
                    problems.append(f"form {form!r} is not lowercase")
                where = f"{voice}.{rel.value}"
                if form in seen and seen[form] != where:
                    problems.append(f"duplicate form {form!r} in {seen[form]} and {where}")
                seen.setdefault(form, where)
    return problems


def _parse(doc: dict) -> VerbLexicon:
    tables = {}
    for voice in ("active", "passive"):
        raw = doc.get(voice, {})
        table = {}
        for name, forms in raw.items():
            try:
                rel = RelType(name)
            except ValueError:
                raise LexiconError(f"unknown relation type {name!r} in [{voice}]") from None
            table[rel] = frozenset(normalize_form(f) if f == f.lower() else f for f in forms)
        tables[voice] = table
    exclude = frozenset(normalize_form(f) for f in doc.get("end_form", {}).get("exclude", []))
    return VerbLexicon(tables["active"], tables["passive"], exclude)


def load_lexicon(path: str | Path | None = None) -> VerbLexicon:
    """Load a lexicon TOML file; ``None`` loads the bundled default."""
    if path is None:
        text = resources.files("rhetorica.data").joinpath("lexicon.toml").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return _parse(tomllib.loads(text))


def parse_lexicon_text(text: str) -> dict:
    """Parse lexicon TOML without validating it (used by config validation)."""
    return tomllib.loads(text)


_DEFAULT: VerbLexicon | None = None


def default_lexicon() -> VerbLexicon:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_lexicon()
    return _DEFAULT
