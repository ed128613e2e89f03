"""Synthetic bill corpora with planted signal for desk-scale validation.

The generator plants two kinds of recoverable structure:

* text signal — enacted and failed bills draw topic tokens from partially
  overlapping vocabularies (``alpha*`` words lean enacted, ``beta*`` lean
  failed, ``gamma*`` are shared); with overlap 1.0 the two distributions
  coincide and no text signal exists;
* context signal — enactment is sampled with weights that grow with
  majority-party sponsorship, committee placement, cosponsor count, and
  sponsor tenure.

Enacted counts are planted exactly per (congress, chamber) by weighted
sampling without replacement, so realized rates match the spec'd rate up
to rounding for any seed. Everything is drawn from one seeded generator
in a fixed order, making corpora bit-reproducible.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import (
    BillRecord,
    Chamber,
    Outcome,
    Session,
    TextSnapshot,
    congress_first_year,
    session_for_date,
    write_bills_jsonl,
)

REGIONS = ("northeast", "south", "north central", "west", "pacific")
PARTIES = ("dem", "rep")


@dataclass
class GeneratorSpec:
    congress_start: int = 103
    congress_end: int = 109
    bills_per_congress: int = 2000
    house_fraction: float = 0.5
    enactment_rate_house: float = 0.05
    enactment_rate_senate: float = 0.05

    # text signal
    base_vocab_size: int = 800
    topic_size: int = 40
    topic_overlap: float = 0.3
    topic_token_rate: float = 0.3
    own_topic_affinity: float = 0.75
    sentences_low: int = 10
    sentences_high: int = 30
    tokens_low: int = 8
    tokens_high: int = 18

    # context signal
    context_strength: float = 2.4
    members_house: int = 200
    members_senate: int = 60
    committees_per_chamber: int = 12
    majority_share: float = 0.55

    subjects: tuple[str, ...] = (
        "agriculture",
        "armed forces",
        "education",
        "health",
        "taxation",
        "commemorations",
    )
    # Bills under this subject get their text topic flipped half the time,
    # planting a genuinely hard-to-read category.
    hard_subject: str = "commemorations"
    hard_subject_rate: float = 0.05

    second_snapshot_rate_enacted: float = 0.5
    second_snapshot_rate_failed: float = 0.08

    def validate(self) -> None:
        for name, rate in (
            ("enactment_rate_house", self.enactment_rate_house),
            ("enactment_rate_senate", self.enactment_rate_senate),
        ):
            if not 0.0 < rate < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {rate}")
        if not 0.0 <= self.topic_overlap <= 1.0:
            raise ValueError("topic_overlap must be in [0, 1]")
        if self.congress_start < 103 or self.congress_end < self.congress_start:
            raise ValueError("invalid congress range")


@dataclass
class Member:
    member_id: str
    party: str
    region: str
    first_congress: int
    committees: list[str]


@dataclass
class SyntheticCorpus:
    """Bills plus the companion tables the features module consumes."""

    bills: list[BillRecord]
    membership_rows: list[tuple[int, str, str, str, int]]
    composition_rows: list[tuple[int, str, str, int]]
    spec: GeneratorSpec
    seed: int

    def write(self, directory: str | Path) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        bills_path = directory / "bills.jsonl"
        write_bills_jsonl(self.bills, bills_path)
        membership_path = directory / "membership.csv"
        with open(membership_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["congress", "committee_id", "member_id", "leadership_code", "start_congress"])
            writer.writerows(self.membership_rows)
        composition_path = directory / "composition.csv"
        with open(composition_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["congress", "chamber", "party", "seats"])
            writer.writerows(self.composition_rows)
        return {"bills": bills_path, "membership": membership_path, "composition": composition_path}


def _topic_vocabularies(spec: GeneratorSpec) -> tuple[list[str], list[str]]:
    n_shared = int(round(spec.topic_overlap * spec.topic_size))
    n_core = spec.topic_size - n_shared
    shared = [f"gamma{i:02d}" for i in range(n_shared)]
    enacted = [f"alpha{i:02d}" for i in range(n_core)] + shared
    failed = [f"beta{i:02d}" for i in range(n_core)] + shared
    return enacted, failed


def _make_members(spec: GeneratorSpec, chamber: Chamber, rng: np.random.Generator) -> list[Member]:
    n = spec.members_house if chamber is Chamber.HOUSE else spec.members_senate
    prefix = "H" if chamber is Chamber.HOUSE else "S"
    n_major = int(round(spec.majority_share * n))
    committees = [f"{prefix}C{i:02d}" for i in range(spec.committees_per_chamber)]
    members = []
    for i in range(n):
        party = PARTIES[0] if i < n_major else PARTIES[1]
        assigned = [committees[j] for j in rng.choice(len(committees), size=2, replace=False)]
        members.append(
            Member(
                member_id=f"{prefix}{i:03d}",
                party=party,
                region=REGIONS[int(rng.integers(0, len(REGIONS)))],
                first_congress=spec.congress_start - int(rng.integers(0, 10)),
                committees=assigned,
            )
        )
    return members


def _sample_base(rng: np.random.Generator, cumw: np.ndarray, size: int) -> np.ndarray:
    return np.searchsorted(cumw, rng.random(size), side="right")


def generate_synthetic_corpus(seed: int, spec: GeneratorSpec | None = None) -> SyntheticCorpus:
    """Deterministically generate a corpus with planted text and context signal."""
    spec = spec or GeneratorSpec()
    spec.validate()
    rng = np.random.default_rng(seed)

    enacted_vocab, failed_vocab = _topic_vocabularies(spec)
    base_words = [f"term{i:03d}" for i in range(spec.base_vocab_size)]
    zipf = 1.0 / np.arange(1, spec.base_vocab_size + 1) ** 0.8
    cum_base = np.cumsum(zipf / zipf.sum())
    title_boiler = ["act", "amend", "provide", "united", "states", "purposes", "relating"]

    members = {chamber: _make_members(spec, chamber, rng) for chamber in Chamber}
    majority = {chamber: PARTIES[0] for chamber in Chamber}

    congresses = range(spec.congress_start, spec.congress_end + 1)
    membership_rows: list[tuple[int, str, str, str, int]] = []
    composition_rows: list[tuple[int, str, str, int]] = []
    for congress in congresses:
        for chamber in Chamber:
            roster = members[chamber]
            by_committee: dict[str, list[Member]] = {}
            for member in roster:
                for committee in member.committees:
                    by_committee.setdefault(committee, []).append(member)
            for committee in sorted(by_committee):
                for rank, member in enumerate(by_committee[committee]):
                    code = str(rank + 1) if rank < 3 else ""
                    membership_rows.append(
                        (congress, committee, member.member_id, code, member.first_congress)
                    )
            for party in PARTIES:
                seats = sum(1 for m in roster if m.party == party)
                composition_rows.append((congress, chamber.value, party, seats))

    bills: list[BillRecord] = []
    for congress in congresses:
        year0 = congress_first_year(congress)
        start = dt.date(year0, 1, 3)
        for chamber in Chamber:
            if chamber is Chamber.HOUSE:
                n_bills = int(round(spec.bills_per_congress * spec.house_fraction))
                rate = spec.enactment_rate_house
            else:
                n_bills = spec.bills_per_congress - int(
                    round(spec.bills_per_congress * spec.house_fraction)
                )
                rate = spec.enactment_rate_senate
            roster = members[chamber]
            committees = sorted({c for m in roster for c in m.committees})
            first_on = {
                c: {m.member_id for m in roster if c in m.committees} for c in committees
            }

            sponsor_idx = rng.integers(0, len(roster), size=n_bills)
            quality = rng.normal(0.0, 1.0, size=n_bills)
            cosponsors = np.floor(np.exp(0.9 * quality + 1.1)).astype(int).clip(0, 400)
            n_committees = rng.integers(1, 4, size=n_bills)
            day_offsets = rng.integers(0, 660, size=n_bills)
            subj_hard = rng.random(n_bills) < spec.hard_subject_rate
            other_subjects = [s for s in spec.subjects if s != spec.hard_subject]
            subj_pick = rng.integers(0, len(other_subjects), size=n_bills)
            flip_roll = rng.random(n_bills) < 0.5

            assigned_committees = []
            scores = np.zeros(n_bills)
            for j in range(n_bills):
                sponsor = roster[int(sponsor_idx[j])]
                picks = rng.choice(len(committees), size=int(n_committees[j]), replace=False)
                assigned = [committees[int(p)] for p in picks]
                assigned_committees.append(assigned)
                maj = sponsor.party == majority[chamber]
                on_first = sponsor.member_id in first_on[assigned[0]]
                terms = congress - sponsor.first_congress + 1
                scores[j] = spec.context_strength * (
                    1.1 * maj + 0.7 * (maj and on_first) + 0.5 * quality[j] + 0.03 * terms
                )

            k_enacted = int(round(rate * n_bills))
            k_enacted = min(max(k_enacted, 1), n_bills - 1)
            weights = np.exp(scores - scores.max())
            chosen = rng.choice(n_bills, size=k_enacted, replace=False, p=weights / weights.sum())
            is_enacted = np.zeros(n_bills, dtype=bool)
            is_enacted[chosen] = True

            for j in range(n_bills):
                sponsor = roster[int(sponsor_idx[j])]
                outcome = Outcome.ENACTED if is_enacted[j] else Outcome.FAILED
                subject = (
                    spec.hard_subject if subj_hard[j] else other_subjects[int(subj_pick[j])]
                )
                text_class = outcome
                if subj_hard[j] and flip_roll[j]:
                    text_class = Outcome.FAILED if is_enacted[j] else Outcome.ENACTED
                own = enacted_vocab if text_class is Outcome.ENACTED else failed_vocab
                other = failed_vocab if text_class is Outcome.ENACTED else enacted_vocab

                n_sent = int(rng.integers(spec.sentences_low, spec.sentences_high + 1))
                body_sentences = _make_sentences(
                    rng, spec, n_sent, own, other, base_words, cum_base
                )
                intro = start + dt.timedelta(days=int(day_offsets[j]))
                session = session_for_date(congress, intro)
                assert session is not None
                snapshots = [
                    TextSnapshot(
                        date=intro,
                        raw_text=". ".join(body_sentences) + ".",
                        session=session,
                        cosponsor_count=int(cosponsors[j]),
                    )
                ]
                grow_rate = (
                    spec.second_snapshot_rate_enacted
                    if outcome is Outcome.ENACTED
                    else spec.second_snapshot_rate_failed
                )
                if rng.random() < grow_rate:
                    later = intro + dt.timedelta(days=int(rng.integers(30, 330)))
                    later = min(later, dt.date(year0 + 2, 1, 2))
                    extra = _make_sentences(
                        rng, spec, int(rng.integers(2, 6)), own, other, base_words,
                        cum_base, affinity=0.9,
                    )
                    session2 = session_for_date(congress, later)
                    assert session2 is not None
                    snapshots.append(
                        TextSnapshot(
                            date=later,
                            raw_text=". ".join(body_sentences + extra) + ".",
                            session=session2,
                            cosponsor_count=int(cosponsors[j] + rng.integers(1, 12)),
                        )
                    )

                n_topic_title = int(rng.integers(2, 4))
                title_words = [
                    title_boiler[int(t)] for t in rng.integers(0, len(title_boiler), 3)
                ] + [own[int(t)] for t in rng.integers(0, len(own), n_topic_title)]
                prefix = "hr" if chamber is Chamber.HOUSE else "s"
                bills.append(
                    BillRecord(
                        bill_id=f"{congress}-{prefix}-{j + 1}",
                        congress=congress,
                        chamber=chamber,
                        outcome=outcome,
                        title="a bill to " + " ".join(title_words),
                        snapshots=snapshots,
                        sponsor_id=sponsor.member_id,
                        subjects_top_term=subject,
                        introduced_month=intro.month,
                        metadata={
                            "sponsor_party": sponsor.party,
                            "sponsor_region": sponsor.region,
                            "committees": assigned_committees[j],
                        },
                    )
                )
    return SyntheticCorpus(
        bills=bills,
        membership_rows=membership_rows,
        composition_rows=composition_rows,
        spec=spec,
        seed=seed,
    )


def _make_sentences(
    rng: np.random.Generator,
    spec: GeneratorSpec,
    n_sent: int,
    own: list[str],
    other: list[str],
    base_words: list[str],
    cum_base: np.ndarray,
    affinity: float | None = None,
) -> list[str]:
    affinity = spec.own_topic_affinity if affinity is None else affinity
    lengths = rng.integers(spec.tokens_low, spec.tokens_high + 1, size=n_sent)
    total = int(lengths.sum())
    is_topic = rng.random(total) < spec.topic_token_rate
    from_own = rng.random(total) < affinity
    own_idx = rng.integers(0, len(own), size=total)
    other_idx = rng.integers(0, len(other), size=total)
    base_idx = _sample_base(rng, cum_base, total)

    tokens = []
    for i in range(total):
        if is_topic[i]:
            tokens.append(own[int(own_idx[i])] if from_own[i] else other[int(other_idx[i])])
        else:
            tokens.append(base_words[int(base_idx[i])])
    sentences = []
    pos = 0
    for length in lengths:
        sentences.append(" ".join(tokens[pos : pos + int(length)]))
        pos += int(length)
    return sentences
