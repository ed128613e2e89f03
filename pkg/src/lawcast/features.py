"""Contextual predictor variables and design-matrix expansion.

Sources: the bill record itself (chamber, month, subject, metadata),
the policy-selected snapshot (cosponsors, session, text length), the
committee membership table, and congress-level history (party seat
composition plus first-known service per member, built only from data
available strictly before the predicted congress).

Factors expand to L-1 indicator columns with fixed reference levels
(January for month, north central for region, social sciences and history
for subject when present). Chamber interactions are products of the house
indicator with every numeric bill characteristic. Missing values ride
through as NaN until :func:`impute_missing`.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import BillRecord, Chamber, SnapshotPolicy, select_snapshot

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Input tables
# ---------------------------------------------------------------------------


class CommitteeTable:
    """Membership rows: (congress, committee_id, member_id, leadership_code, start_congress)."""

    def __init__(self) -> None:
        self._rows: dict[tuple[int, str], dict[str, tuple[str, int]]] = {}
        self._member_congresses: dict[str, set[int]] = {}
        self._member_start: dict[str, int] = {}

    def add(
        self,
        congress: int,
        committee_id: str,
        member_id: str,
        leadership_code: str,
        start_congress: int,
    ) -> None:
        self._rows.setdefault((congress, committee_id), {})[member_id] = (
            leadership_code,
            start_congress,
        )
        self._member_congresses.setdefault(member_id, set()).add(congress)
        prev = self._member_start.get(member_id)
        if prev is None or start_congress < prev:
            self._member_start[member_id] = start_congress

    @classmethod
    def from_csv(cls, path: str | Path) -> "CommitteeTable":
        table = cls()
        with open(path, "r", newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                table.add(
                    int(row["congress"]),
                    row["committee_id"],
                    row["member_id"],
                    (row.get("leadership_code") or "").strip(),
                    int(row["start_congress"]),
                )
        return table

    def lookup(self, congress: int, committee_id: str, member_id: str) -> tuple[str, int] | None:
        return self._rows.get((congress, committee_id), {}).get(member_id)

    def member_known(self, congress: int, member_id: str) -> bool:
        return congress in self._member_congresses.get(member_id, ())

    def earliest_start(self, member_id: str) -> int | None:
        return self._member_start.get(member_id)


class ChamberComposition:
    """Party seat counts per (congress, chamber)."""

    def __init__(self) -> None:
        self._seats: dict[tuple[int, Chamber], dict[str, int]] = {}

    def add(self, congress: int, chamber: Chamber, party: str, seats: int) -> None:
        self._seats.setdefault((congress, chamber), {})[party] = seats

    @classmethod
    def from_csv(cls, path: str | Path) -> "ChamberComposition":
        comp = cls()
        with open(path, "r", newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                comp.add(
                    int(row["congress"]), Chamber(row["chamber"]), row["party"], int(row["seats"])
                )
        return comp

    def majority(self, congress: int, chamber: Chamber) -> str | None:
        seats = self._seats.get((congress, chamber))
        if not seats:
            return None
        return max(sorted(seats), key=lambda p: seats[p])

    def party_proportion(self, congress: int, chamber: Chamber, party: str) -> float | None:
        seats = self._seats.get((congress, chamber))
        if not seats or party not in seats:
            return None
        total = sum(seats.values())
        return seats[party] / total if total else None


class HistoryIndex:
    """Congress-level aggregates safe to use when predicting congress t.

    Sponsorship service is collected from the supplied bills; callers pass
    bills from strictly earlier congresses. First-known service per member
    also draws on the membership table's static start_congress field.
    """

    def __init__(self, composition: ChamberComposition, membership: CommitteeTable):
        self.composition = composition
        self.membership = membership
        self._first_sponsored: dict[str, int] = {}

    @classmethod
    def build(
        cls,
        prior_bills: list[BillRecord],
        membership: CommitteeTable,
        composition: ChamberComposition,
    ) -> "HistoryIndex":
        index = cls(composition, membership)
        for bill in prior_bills:
            prev = index._first_sponsored.get(bill.sponsor_id)
            if prev is None or bill.congress < prev:
                index._first_sponsored[bill.sponsor_id] = bill.congress
        return index

    def sponsor_terms(self, sponsor_id: str, congress: int) -> int:
        """1 + congresses served before this one; a sponsor with no known
        history gets 1 (their current term)."""
        candidates = []
        start = self.membership.earliest_start(sponsor_id)
        if start is not None:
            candidates.append(start)
        sponsored = self._first_sponsored.get(sponsor_id)
        if sponsored is not None:
            candidates.append(sponsored)
        if not candidates:
            return 1
        return max(1, congress - min(candidates) + 1)


# ---------------------------------------------------------------------------
# Per-bill features
# ---------------------------------------------------------------------------


@dataclass
class ContextFeatures:
    """The contextual predictors for one bill; None marks a missing value."""

    region: str | None
    sponsor_party_prop: float | None
    sponsor_terms: int
    committee_seniority: float | None
    committee_position: str
    not_maj_on_com: int | None
    maj_on_com: int | None
    num_cosponsors: int
    session: int
    house: int
    month: int
    subjects_top_term: str
    text_length: int


def _years_on_committee(congress: int, start_congress: int) -> float:
    return 2.0 * max(0, congress - start_congress + 1)


def build_features(
    bill: BillRecord,
    membership: CommitteeTable,
    history: HistoryIndex,
    policy: SnapshotPolicy,
) -> ContextFeatures:
    """Assemble the predictor variables for one bill.

    Committee seniority averages years over the bill's assigned committees,
    counting 0 for committees the sponsor is not on; a sponsor entirely
    absent from the congress's membership tables gets committee fields
    marked missing. Snapshot-derived fields (cosponsors, session, text
    length) follow the policy.
    """
    snapshot = select_snapshot(bill, policy)
    congress = bill.congress
    sponsor = bill.sponsor_id
    committees = [str(c) for c in bill.metadata.get("committees", [])]
    sponsor_party = bill.metadata.get("sponsor_party")
    region = bill.metadata.get("sponsor_region")

    known = membership.member_known(congress, sponsor)
    seniority: float | None
    position = "none"
    on_first: bool | None = None
    if not known:
        seniority = None
    elif not committees:
        seniority = 0.0
        on_first = False
    else:
        years = []
        codes = []
        for committee in committees:
            row = membership.lookup(congress, committee, sponsor)
            if row is None:
                years.append(0.0)
            else:
                code, start = row
                years.append(_years_on_committee(congress, start))
                if code:
                    codes.append(int(code))
        seniority = float(np.mean(years))
        if codes:
            position = str(min(codes))
        on_first = membership.lookup(congress, committees[0], sponsor) is not None

    majority = history.composition.majority(congress, bill.chamber)
    maj_on_com: int | None
    not_maj_on_com: int | None
    if sponsor_party is None or majority is None or on_first is None:
        maj_on_com = None
        not_maj_on_com = None
    else:
        in_majority = sponsor_party == majority
        maj_on_com = int(in_majority and on_first)
        not_maj_on_com = int((not in_majority) and on_first)

    prop = (
        history.composition.party_proportion(congress, bill.chamber, sponsor_party)
        if sponsor_party is not None
        else None
    )

    return ContextFeatures(
        region=region,
        sponsor_party_prop=prop,
        sponsor_terms=history.sponsor_terms(sponsor, congress),
        committee_seniority=seniority,
        committee_position=position,
        not_maj_on_com=not_maj_on_com,
        maj_on_com=maj_on_com,
        num_cosponsors=snapshot.cosponsor_count,
        session=int(snapshot.session.value),
        house=int(bill.chamber is Chamber.HOUSE),
        month=bill.introduced_month,
        subjects_top_term=bill.subjects_top_term,
        text_length=snapshot.text_length_chars,
    )


# ---------------------------------------------------------------------------
# Design-matrix expansion
# ---------------------------------------------------------------------------


NUMERIC_FIELDS = [
    "sponsor_party_prop",
    "sponsor_terms",
    "committee_seniority",
    "not_maj_on_com",
    "maj_on_com",
    "num_cosponsors",
    "session_second",
    "house",
    "text_length",
]
FACTOR_FIELDS = ["region", "month", "subjects_top_term", "committee_position"]
PREFERRED_REFERENCES = {
    "month": "1",  # January
    "region": "north central",
    "subjects_top_term": "social sciences and history",
    "committee_position": "none",
}
TEXT_SCORE_COLUMNS = ["text_prob_body", "text_prob_title"]


@dataclass
class DesignMatrix:
    column_names: list[str]
    X: np.ndarray
    reference_levels: dict[str, str] = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.column_names.index(name)]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.column_names)
            for row in self.X:
                writer.writerow([format(v, ".17g") for v in row])
        sidecar = Path(str(path) + ".manifest.json")
        sidecar.write_text(
            json.dumps({"reference_levels": self.reference_levels}, indent=1, sort_keys=True)
        )


def _factor_value(features: ContextFeatures, name: str) -> str | None:
    value = getattr(features, name)
    if value is None:
        return None
    return str(value)


class DesignBuilder:
    """Captures factor levels and reference choices from training features,
    then expands any feature list against that fixed schema."""

    def __init__(self) -> None:
        self.levels: dict[str, list[str]] = {}
        self.references: dict[str, str] = {}
        self._warned: set[str] = set()

    def fit(self, features: list[ContextFeatures]) -> "DesignBuilder":
        for factor in FACTOR_FIELDS:
            observed: dict[str, int] = {}
            for f in features:
                value = _factor_value(f, factor)
                if value is not None:
                    observed[value] = observed.get(value, 0) + 1
            if not observed:
                self.levels[factor] = []
                self.references[factor] = ""
                continue
            preferred = PREFERRED_REFERENCES.get(factor)
            if preferred in observed:
                reference = preferred
            else:
                reference = sorted(observed)[0]
            self.references[factor] = reference
            self.levels[factor] = [lv for lv in sorted(observed) if lv != reference]
        return self

    def column_names(self, with_text: bool, with_interactions: bool) -> list[str]:
        names = list(NUMERIC_FIELDS)
        for factor in FACTOR_FIELDS:
            names.extend(f"{factor}={lv}" for lv in self.levels[factor])
        if with_text:
            names.extend(TEXT_SCORE_COLUMNS)
        if with_interactions:
            interacting = [n for n in NUMERIC_FIELDS if n != "house"]
            if with_text:
                interacting += TEXT_SCORE_COLUMNS
            names.extend(f"house:{n}" for n in interacting)
        return names

    def transform(
        self,
        features: list[ContextFeatures],
        text_scores: np.ndarray | None = None,
        with_interactions: bool = False,
    ) -> DesignMatrix:
        n = len(features)
        with_text = text_scores is not None
        if with_text and len(text_scores) != n:
            raise ValueError("text_scores rows must align with features")
        names = self.column_names(with_text, with_interactions)
        X = np.zeros((n, len(names)))
        col = {name: i for i, name in enumerate(names)}

        def put(row: int, name: str, value: float | int | None) -> None:
            X[row, col[name]] = np.nan if value is None else float(value)

        for i, f in enumerate(features):
            put(i, "sponsor_party_prop", f.sponsor_party_prop)
            put(i, "sponsor_terms", f.sponsor_terms)
            put(i, "committee_seniority", f.committee_seniority)
            put(i, "not_maj_on_com", f.not_maj_on_com)
            put(i, "maj_on_com", f.maj_on_com)
            put(i, "num_cosponsors", f.num_cosponsors)
            put(i, "session_second", int(f.session == 2))
            put(i, "house", f.house)
            put(i, "text_length", f.text_length)
            for factor in FACTOR_FIELDS:
                value = _factor_value(f, factor)
                if value is None:
                    for lv in self.levels[factor]:
                        X[i, col[f"{factor}={lv}"]] = np.nan
                    continue
                if value != self.references[factor] and value not in self.levels[factor]:
                    key = f"{factor}={value}"
                    if key not in self._warned:
                        self._warned.add(key)
                        logger.warning(
                            "unseen level %r for factor %r mapped to all-zero indicators",
                            value,
                            factor,
                        )
                    continue
                if value != self.references[factor]:
                    X[i, col[f"{factor}={value}"]] = 1.0
        if with_text:
            for j, name in enumerate(TEXT_SCORE_COLUMNS):
                X[:, col[name]] = np.asarray(text_scores)[:, j]
        if with_interactions:
            house = X[:, col["house"]]
            for name in names:
                if not name.startswith("house:"):
                    continue
                parent = X[:, col[name[len("house:") :]]]
                # Senate rows are identically 0 even when the parent is missing.
                X[:, col[name]] = np.where(house == 1.0, house * parent, 0.0)
        return DesignMatrix(column_names=names, X=X, reference_levels=dict(self.references))

    def to_dict(self) -> dict:
        return {"levels": self.levels, "references": self.references}

    @classmethod
    def from_dict(cls, obj: dict) -> "DesignBuilder":
        builder = cls()
        builder.levels = {k: list(v) for k, v in obj["levels"].items()}
        builder.references = dict(obj["references"])
        return builder


def expand_design(
    features: list[ContextFeatures],
    text_scores: np.ndarray | None = None,
    with_interactions: bool = False,
) -> DesignMatrix:
    """One-shot fit-and-expand; for train/test consistency use DesignBuilder."""
    return DesignBuilder().fit(features).transform(features, text_scores, with_interactions)


# ---------------------------------------------------------------------------
# Missing-value handling
# ---------------------------------------------------------------------------


class Imputer:
    """Median fill learned on training data, plus per-column missing flags.

    Indicator columns are added for exactly the columns that had missing
    values at fit time, keeping train and test schemas aligned.
    """

    def __init__(self) -> None:
        self.medians: dict[str, float] = {}
        self.flagged: list[str] = []

    def fit(self, matrix: DesignMatrix) -> "Imputer":
        for j, name in enumerate(matrix.column_names):
            column = matrix.X[:, j]
            missing = np.isnan(column)
            if not missing.any():
                continue
            if missing.all():
                raise ValueError(f"column {name!r} is entirely missing")
            self.medians[name] = float(np.median(column[~missing]))
            self.flagged.append(name)
        return self

    def transform(self, matrix: DesignMatrix) -> DesignMatrix:
        X = matrix.X.copy()
        indicators = []
        for name in self.flagged:
            j = matrix.column_names.index(name)
            missing = np.isnan(X[:, j])
            X[missing, j] = self.medians[name]
            indicators.append(missing.astype(float))
        # any stray missing values in unflagged columns fall back to 0
        remaining = np.isnan(X)
        if remaining.any():
            X[remaining] = 0.0
        names = list(matrix.column_names) + [f"{n}_missing" for n in self.flagged]
        if indicators:
            X = np.column_stack([X] + indicators)
        return DesignMatrix(names, X, dict(matrix.reference_levels))

    def to_dict(self) -> dict:
        return {"medians": self.medians, "flagged": self.flagged}

    @classmethod
    def from_dict(cls, obj: dict) -> "Imputer":
        imp = cls()
        imp.medians = {k: float(v) for k, v in obj["medians"].items()}
        imp.flagged = list(obj["flagged"])
        return imp


def impute_missing(matrix: DesignMatrix, strategy: str = "drop") -> DesignMatrix:
    """``drop`` removes rows with any missing value; ``median_plus_indicator``
    fills numerics with this matrix's medians and appends missing flags."""
    if strategy == "drop":
        keep = ~np.isnan(matrix.X).any(axis=1)
        return DesignMatrix(
            list(matrix.column_names), matrix.X[keep].copy(), dict(matrix.reference_levels)
        )
    if strategy == "median_plus_indicator":
        return Imputer().fit(matrix).transform(matrix)
    raise ValueError(f"unknown strategy {strategy!r}")
