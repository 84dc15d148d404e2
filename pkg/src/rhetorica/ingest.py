"""Corpus loading, off-topic filtering and faction labelling."""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterator

log = logging.getLogger(__name__)

FIELDS = ("id", "created_at", "text", "user_bio", "is_retweet")

# Case-sensitive on purpose: the bare "US" alternative also fires inside words
# ("discUSsion"). Kept as-is for compatibility with the original filter.
OFFTOPIC_REGEX = re.compile(
    r"China|china|u[.]s[.]a|u[.]s| U[.]S|US|USA|UNITEDSTATES|UnitedStates|unitedstates"
    r"|UNITED STATES|United States|united states|trump|Trump|TRUMP|XI|Xi"
)

BREXITEER_TERMS = (
    "brexiteer", "vote brexit", "voted brexit", "voted for brexit", "ukip",
    "brexit party", "vote leave", "leave the EU", "respect my vote", "johnson",
    "farage", "anti-eu", "antieu",
)
REMAINER_TERMS = (
    "remainer", "vote remain", "voted remain", "voted for remain", "remain party",
    "new vote", "stay in the eu", "pro-eu", "proeu",
)
_BREXITEER = re.compile("|".join(re.escape(t) for t in BREXITEER_TERMS), re.IGNORECASE)
_REMAINER = re.compile("|".join(re.escape(t) for t in REMAINER_TERMS), re.IGNORECASE)


class Faction(str, enum.Enum):
    BREXITEER = "Brexiteer"
    REMAINER = "Remainer"
    OTHER = "Other"


@dataclass(frozen=True)
class TweetRecord:
    id: str
    created_at: datetime
    text: str
    user_bio: str
    is_retweet: bool

    @property
    def day(self) -> date:
        return self.created_at.astimezone(timezone.utc).date()


@dataclass
class CorpusFilterReport:
    total_in: int = 0
    removed_offtopic: int = 0
    kept: int = 0
    skipped_retweets: int = 0
    errors: int = 0

    def to_dict(self) -> dict:
        return dict(vars(self))


class RecordError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"{message} at line {line}")
        self.line = line


def parse_timestamp(value: str) -> datetime:
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_record(obj: dict, line: int) -> TweetRecord:
    for name in ("id", "text", "created_at", "user_bio", "is_retweet"):
        if name not in obj:
            raise RecordError(f"missing field {name}", line)
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise RecordError("empty field id", line)
    try:
        created = parse_timestamp(str(obj["created_at"]))
    except ValueError:
        raise RecordError(f"unparseable created_at {obj['created_at']!r}", line) from None
    return TweetRecord(
        id=obj["id"],
        created_at=created,
        text=str(obj["text"]),
        user_bio=str(obj["user_bio"] or ""),
        is_retweet=bool(obj["is_retweet"]),
    )


def iter_corpus(path: str | Path, include_retweets: bool = True,
                report: CorpusFilterReport | None = None,
                errors: list[RecordError] | None = None) -> Iterator[TweetRecord]:
    """Yield records in file order.

    Bad lines are logged (and appended to ``errors`` when given); reading
    continues with the next line.
    """
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise RecordError("not a JSON object", lineno)
                rec = parse_record(obj, lineno)
                if rec.id in seen:
                    raise RecordError(f"duplicate id {rec.id!r}", lineno)
            except json.JSONDecodeError as exc:
                err = RecordError(f"malformed JSON ({exc.msg})", lineno)
                _record_error(err, report, errors)
                continue
            except RecordError as err:
                _record_error(err, report, errors)
                continue
            seen.add(rec.id)
            if rec.is_retweet and not include_retweets:
                if report is not None:
                    report.skipped_retweets += 1
                continue
            yield rec


def _record_error(err, report, errors):
    log.warning("%s", err)
    if report is not None:
        report.errors += 1
    if errors is not None:
        errors.append(err)


def load_corpus(path: str | Path, include_retweets: bool = True) -> list[TweetRecord]:
    return list(iter_corpus(path, include_retweets))


def filter_offtopic(rec: TweetRecord | str) -> bool:
    """Return ``True`` to keep the record, ``False`` for US/China trade-war posts."""
    text = rec if isinstance(rec, str) else rec.text
    return OFFTOPIC_REGEX.search(text) is None


def classify_faction(bio: str) -> Faction:
    brex = _BREXITEER.search(bio or "") is not None
    rem = _REMAINER.search(bio or "") is not None
    if brex and not rem:
        return Faction.BREXITEER
    if rem and not brex:
        return Faction.REMAINER
    return Faction.OTHER


def ingest(path: str | Path, include_retweets: bool = True) -> tuple[list[dict], CorpusFilterReport]:
    """Load, filter and label; returns output rows and the filter report.

    Each row holds the record fields plus ``faction`` and ``day`` (UTC date).
    """
    report = CorpusFilterReport()
    rows = []
    for rec in iter_corpus(path, include_retweets, report):
        report.total_in += 1
        if not filter_offtopic(rec):
            report.removed_offtopic += 1
            continue
        report.kept += 1
        rows.append({
            "id": rec.id,
            "created_at": rec.created_at.isoformat(),
            "text": rec.text,
            "user_bio": rec.user_bio,
            "is_retweet": rec.is_retweet,
            "faction": classify_faction(rec.user_bio).value,
            "day": rec.day.isoformat(),
        })
    return rows, report
