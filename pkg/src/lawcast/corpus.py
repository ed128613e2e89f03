"""Bill corpus: record types, text normalization, sentence splitting, ingestion.

A corpus is a list of :class:`BillRecord`. Each record carries one or more
dated full-text snapshots; downstream code picks one per bill through a
:class:`SnapshotPolicy` (oldest = text as introduced, newest = most recent
version). Only proper bills are ingested; simple, joint, and concurrent
resolutions are rejected.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator


class Chamber(str, Enum):
    HOUSE = "house"
    SENATE = "senate"


class Outcome(str, Enum):
    ENACTED = "enacted"
    FAILED = "failed"


class Session(int, Enum):
    FIRST = 1
    SECOND = 2


class Selector(str, Enum):
    OLDEST = "oldest"
    NEWEST = "newest"


@dataclass(frozen=True)
class SnapshotPolicy:
    """Which dated text version of a bill to use."""

    selector: Selector = Selector.OLDEST

    @classmethod
    def oldest(cls) -> "SnapshotPolicy":
        return cls(Selector.OLDEST)

    @classmethod
    def newest(cls) -> "SnapshotPolicy":
        return cls(Selector.NEWEST)


# Bill types that are actual bills; anything else (hres, sjres, hconres, ...)
# is a resolution and is rejected at ingestion.
BILL_TYPES = {"hr": Chamber.HOUSE, "s": Chamber.SENATE}

MIN_CONGRESS = 103


def congress_first_year(congress: int) -> int:
    """First calendar year of a two-year Congress (103rd -> 1993)."""
    return 1993 + 2 * (congress - 103)


def session_for_date(congress: int, date: dt.date) -> Session | None:
    """Session implied by a date within a Congress, or None if out of range.

    Second-session business routinely spills into January of the following
    year, so that month is attributed to session two.
    """
    first = congress_first_year(congress)
    if date.year == first:
        return Session.FIRST
    if date.year == first + 1:
        return Session.SECOND
    if date.year == first + 2 and date.month == 1:
        return Session.SECOND
    return None


@dataclass
class TextSnapshot:
    """One dated full-text version of a bill.

    ``text`` is the normalized form of the raw export; ``text_length_chars``
    is its character count (0 is possible when the raw text was pure markup,
    and such snapshots are skipped by language-model training).
    """

    date: dt.date
    raw_text: str
    session: Session
    cosponsor_count: int
    text: str = field(repr=False, default="")
    text_length_chars: int = 0

    def __post_init__(self) -> None:
        if not self.text:
            self.text = normalize_text(self.raw_text)
        self.text_length_chars = len(self.text)
        if self.cosponsor_count < 0:
            raise ValueError("cosponsor_count must be >= 0")


@dataclass
class BillRecord:
    """One bill: identity, outcome label, sponsor context, dated texts."""

    bill_id: str
    congress: int
    chamber: Chamber
    outcome: Outcome
    title: str
    snapshots: list[TextSnapshot]
    sponsor_id: str
    subjects_top_term: str
    introduced_month: int
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.congress < MIN_CONGRESS:
            raise ValueError(f"congress {self.congress} below {MIN_CONGRESS}")
        if not self.snapshots:
            raise ValueError("bill must have at least one snapshot")
        dates = [s.date for s in self.snapshots]
        if any(b < a for a, b in zip(dates, dates[1:])):
            raise ValueError("snapshot dates must be nondecreasing")
        if not 1 <= self.introduced_month <= 12:
            raise ValueError("introduced_month must be in 1..12")


# ---------------------------------------------------------------------------
# Text normalization and segmentation
# ---------------------------------------------------------------------------

_TAG_RE = re.compile(r"<[^>]*>")
_WS_RE = re.compile(r"\s+")

# The five standard named entities; ampersand decoded last so that
# "&amp;lt;" resolves one layer per pass.
_ENTITIES = [("&lt;", "<"), ("&gt;", ">"), ("&quot;", '"'), ("&apos;", "'"), ("&amp;", "&")]


def _normalize_pass(text: str) -> str:
    text = text.lower()
    for entity, char in _ENTITIES:
        text = text.replace(entity, char)
    text = _TAG_RE.sub(" ", text)
    text = text.replace("\r", " ")
    text = _WS_RE.sub(" ", text)
    return text.strip()


def normalize_text(raw: str) -> str:
    """Strip markup, decode basic entities, collapse whitespace, lower-case.

    Applied to a fixpoint so the result is idempotent even when entity
    decoding exposes new markup (each pass can only shrink the text, so
    this terminates).
    """
    current = raw
    for _ in range(max(4, len(raw))):
        nxt = _normalize_pass(current)
        if nxt == current:
            return nxt
        current = nxt
    return current


# Dotted abbreviations common in legislative text whose trailing period must
# not end a sentence. Any single alphanumeric token ("1.", "a.") is also
# guarded, covering enumerated section labels.
SENTENCE_GUARDS = frozenset({"sec", "secs", "no", "nos", "u.s.c", "u.s", "h.r", "s", "pub", "l", "stat", "cong", "res"})

_TERMINATOR_RE = re.compile(r"[.!?](?=\s|$)")
_TOKEN_BEFORE_RE = re.compile(r"([0-9a-z]+(?:\.[0-9a-z]+)*)$")


def split_sentences(normalized: str) -> list[str]:
    """Split normalized text into sentences on ``.!?`` followed by space/end.

    A period is suppressed as a terminator when the token just before it is
    a guarded abbreviation or a single alphanumeric character. Joining the
    output with single spaces reconstructs the input.
    """
    if not normalized:
        return []
    sentences: list[str] = []
    start = 0
    for match in _TERMINATOR_RE.finditer(normalized):
        pos = match.start()
        if normalized[pos] == ".":
            before = _TOKEN_BEFORE_RE.search(normalized, 0, pos)
            if before:
                token = before.group(1)
                if len(token) == 1 or token in SENTENCE_GUARDS:
                    continue
        piece = normalized[start : pos + 1].strip()
        if piece:
            sentences.append(piece)
        start = pos + 1
    tail = normalized[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(sentence: str) -> list[str]:
    """Maximal runs of letters/digits, in order; hyphens and punctuation split."""
    return _WORD_RE.findall(sentence)


def tokenize_sentences(text: str) -> list[list[str]]:
    """Normalize, split, and tokenize; drops sentences with no tokens."""
    result = []
    for sentence in split_sentences(normalize_text(text)):
        tokens = tokenize(sentence)
        if tokens:
            result.append(tokens)
    return result


def select_snapshot(bill: BillRecord, policy: SnapshotPolicy) -> TextSnapshot:
    """Pick the snapshot the policy asks for; date ties keep the first ingested."""
    snaps = bill.snapshots
    if policy.selector is Selector.OLDEST:
        best = snaps[0]
        for snap in snaps[1:]:
            if snap.date < best.date:
                best = snap
        return best
    best = snaps[0]
    for snap in snaps[1:]:
        if snap.date > best.date:
            best = snap
    return best


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


@dataclass
class Rejection:
    bill_id: str
    reason: str


@dataclass
class IngestResult:
    bills: list[BillRecord]
    rejections: list[Rejection]

    def write_rejection_report(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bill_id", "reason"])
            for rej in self.rejections:
                writer.writerow([rej.bill_id, rej.reason])


class IngestError(Exception):
    """Unreadable file or unusable format (fatal, not per-record)."""


def _parse_record(obj: dict[str, Any]) -> BillRecord:
    bill_id = str(obj.get("bill_id") or "").strip()
    if not bill_id:
        raise ValueError("missing bill_id")
    congress = int(obj["congress"])
    if congress < MIN_CONGRESS:
        raise ValueError(f"congress {congress} below {MIN_CONGRESS}")
    chamber_raw = str(obj["chamber"]).lower()
    try:
        chamber = Chamber(chamber_raw)
    except ValueError:
        raise ValueError(f"unknown chamber {chamber_raw!r}") from None
    bill_type = str(obj.get("bill_type", "")).lower()
    if bill_type not in BILL_TYPES:
        raise ValueError(f"bill_type {bill_type!r} is not a bill (resolutions excluded)")
    if BILL_TYPES[bill_type] is not chamber:
        raise ValueError(f"bill_type {bill_type!r} inconsistent with chamber {chamber.value}")
    outcome_raw = str(obj["outcome"]).lower()
    try:
        outcome = Outcome(outcome_raw)
    except ValueError:
        raise ValueError(f"unknown outcome {outcome_raw!r}") from None

    snapshots_raw = obj.get("snapshots") or []
    if not snapshots_raw:
        raise ValueError("no snapshots")
    snapshots = []
    for snap in snapshots_raw:
        raw_text = snap.get("text", "")
        if not raw_text:
            raise ValueError("snapshot with empty text")
        date = dt.date.fromisoformat(snap["date"])
        session = Session(int(snap["session"]))
        implied = session_for_date(congress, date)
        if implied is None:
            raise ValueError(f"snapshot date {date} outside congress {congress}")
        if implied is not session:
            raise ValueError(f"session {session.value} inconsistent with date {date}")
        snapshots.append(
            TextSnapshot(
                date=date,
                raw_text=raw_text,
                session=session,
                cosponsor_count=int(snap.get("cosponsor_count", 0)),
            )
        )
    snapshots.sort(key=lambda s: s.date)  # stable: ingestion order kept on ties

    return BillRecord(
        bill_id=bill_id,
        congress=congress,
        chamber=chamber,
        outcome=outcome,
        title=str(obj.get("title", "")),
        snapshots=snapshots,
        sponsor_id=str(obj.get("sponsor_id", "")),
        subjects_top_term=str(obj.get("subjects_top_term", "")),
        introduced_month=snapshots[0].date.month,
        metadata=dict(obj.get("metadata") or {}),
    )


def _iter_jsonl(path: Path) -> Iterator[tuple[str, dict[str, Any] | None, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield f"<line {lineno}>", None, f"invalid json: {exc.msg}"
                continue
            yield str(obj.get("bill_id", f"<line {lineno}>")), obj, ""


def _iter_csv(path: Path) -> Iterator[tuple[str, dict[str, Any] | None, str]]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            obj: dict[str, Any] = dict(row)
            bill_id = str(row.get("bill_id", "<row>"))
            try:
                for key in ("snapshots", "metadata"):
                    if obj.get(key):
                        obj[key] = json.loads(obj[key])
            except json.JSONDecodeError as exc:
                yield bill_id, None, f"invalid embedded json in {key}: {exc.msg}"
                continue
            yield bill_id, obj, ""


def ingest_bills(path: str | Path, format: str = "jsonl") -> IngestResult:
    """Read and validate a bill export file.

    Malformed records are rejected individually with a reason; an unreadable
    file raises :class:`IngestError`. ``format`` is ``jsonl`` (one JSON
    object per line) or ``csv`` (snapshots/metadata columns hold embedded
    JSON).
    """
    path = Path(path)
    if format == "jsonl":
        rows = _iter_jsonl(path)
    elif format == "csv":
        rows = _iter_csv(path)
    else:
        raise IngestError(f"unknown format {format!r}")

    bills: list[BillRecord] = []
    rejections: list[Rejection] = []
    try:
        for bill_id, obj, err in rows:
            if obj is None:
                rejections.append(Rejection(bill_id, err))
                continue
            try:
                bills.append(_parse_record(obj))
            except (ValueError, KeyError, TypeError) as exc:
                rejections.append(Rejection(bill_id, str(exc)))
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    return IngestResult(bills=bills, rejections=rejections)


def write_bills_jsonl(bills: Iterable[BillRecord], path: str | Path) -> None:
    """Serialize bills in the ingestion format (round-trips through ingest_bills)."""
    with open(path, "w", encoding="utf-8") as fh:
        for bill in bills:
            obj = {
                "bill_id": bill.bill_id,
                "congress": bill.congress,
                "chamber": bill.chamber.value,
                "bill_type": "hr" if bill.chamber is Chamber.HOUSE else "s",
                "outcome": bill.outcome.value,
                "title": bill.title,
                "sponsor_id": bill.sponsor_id,
                "subjects_top_term": bill.subjects_top_term,
                "snapshots": [
                    {
                        "date": snap.date.isoformat(),
                        "text": snap.raw_text,
                        "cosponsor_count": snap.cosponsor_count,
                        "session": snap.session.value,
                    }
                    for snap in bill.snapshots
                ],
                "metadata": bill.metadata,
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
