"""Bill classification by inversion of class-conditional language models.

Separate embedding models are fit to the enacted and failed sub-corpora of
each chamber (body text and titles separately, eight models total). A
sentence is scored under both class models of its chamber; Bayes' rule
combines the two log-likelihoods with the chamber's historical enactment
prior, and a bill's probability is the mean of its sentence posteriors.

A token position contributes to either likelihood only when the target and
at least one context word are in *both* class vocabularies, so the
likelihood ratio is always over a shared event space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import (
    BillRecord,
    Chamber,
    Outcome,
    SnapshotPolicy,
    normalize_text,
    select_snapshot,
    split_sentences,
    tokenize,
)
from .embeddings import (
    EmbeddingModel,
    TrainConfig,
    load_model,
    save_model,
    sequence_loglik,
    train_cbow,
)
from .seeding import derive_seed

import numpy as np


class Channel(str, Enum):
    BODY = "body"
    TITLE = "title"


@dataclass
class PriorTable:
    """Per-chamber enactment priors from strictly earlier congresses.

    Priors are clamped to [1/(2n), 1 - 1/(2n)] so Bayes' rule never sees a
    degenerate 0 or 1.
    """

    priors: dict[Chamber, float]
    n_history: dict[Chamber, int]

    def get(self, chamber: Chamber) -> float:
        if chamber not in self.priors:
            raise ValueError(f"no history for chamber {chamber.value!r}")
        return self.priors[chamber]


def compute_priors(history: list[BillRecord], predicted_congress: int) -> PriorTable:
    """Enacted fraction per chamber over all congresses before the predicted one."""
    priors: dict[Chamber, float] = {}
    counts: dict[Chamber, int] = {}
    enacted: dict[Chamber, int] = {}
    for bill in history:
        if bill.congress >= predicted_congress:
            raise ValueError(
                f"history bill {bill.bill_id} is from congress {bill.congress}, "
                f"not strictly before {predicted_congress}"
            )
        counts[bill.chamber] = counts.get(bill.chamber, 0) + 1
        if bill.outcome is Outcome.ENACTED:
            enacted[bill.chamber] = enacted.get(bill.chamber, 0) + 1
    for chamber, n in counts.items():
        raw = enacted.get(chamber, 0) / n
        lo = 1.0 / (2.0 * n)
        priors[chamber] = min(max(raw, lo), 1.0 - lo)
    return PriorTable(priors=priors, n_history=counts)


@dataclass
class InversionConfig:
    body: TrainConfig = field(default_factory=TrainConfig)
    title: TrainConfig = field(default_factory=lambda: TrainConfig(dim=50, min_count=2))
    # Divide sentence log-likelihoods by the scored-token count before
    # Bayes' rule. Off by default: both models score identical positions,
    # so length affects confidence, not comparability.
    length_normalize: bool = False


@dataclass
class BillScore:
    """Overall probability plus the per-sentence posterior profile."""

    probability: float
    sentence_posteriors: list[float]
    n_unscoreable: int = 0
    prior_fallback: bool = False


class InversionClassifier:
    """Four body models and four title models keyed by (chamber, outcome)."""

    def __init__(
        self,
        body_models: dict[tuple[Chamber, Outcome], EmbeddingModel],
        title_models: dict[tuple[Chamber, Outcome], EmbeddingModel],
        priors: PriorTable,
        config: InversionConfig,
    ):
        self.body_models = body_models
        self.title_models = title_models
        self.priors = priors
        self.config = config

    def models(self, chamber: Chamber, channel: Channel) -> tuple[EmbeddingModel, EmbeddingModel]:
        table = self.body_models if channel is Channel.BODY else self.title_models
        return table[(chamber, Outcome.ENACTED)], table[(chamber, Outcome.FAILED)]

    # -- persistence --------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for channel, table in (("body", self.body_models), ("title", self.title_models)):
            for (chamber, outcome), model in table.items():
                save_model(model, directory / f"{channel}_{chamber.value}_{outcome.value}.emb")
        meta = {
            "priors": {c.value: p for c, p in self.priors.priors.items()},
            "n_history": {c.value: n for c, n in self.priors.n_history.items()},
            "length_normalize": self.config.length_normalize,
        }
        (directory / "priors.json").write_text(json.dumps(meta, sort_keys=True, indent=1))

    @classmethod
    def load(cls, directory: str | Path) -> "InversionClassifier":
        directory = Path(directory)
        meta = json.loads((directory / "priors.json").read_text())
        priors = PriorTable(
            priors={Chamber(c): p for c, p in meta["priors"].items()},
            n_history={Chamber(c): n for c, n in meta["n_history"].items()},
        )
        body: dict[tuple[Chamber, Outcome], EmbeddingModel] = {}
        title: dict[tuple[Chamber, Outcome], EmbeddingModel] = {}
        for channel, table in (("body", body), ("title", title)):
            for chamber in Chamber:
                for outcome in Outcome:
                    path = directory / f"{channel}_{chamber.value}_{outcome.value}.emb"
                    table[(chamber, outcome)] = load_model(path)
        config = InversionConfig(
            body=body[(Chamber.HOUSE, Outcome.ENACTED)].config,
            title=title[(Chamber.HOUSE, Outcome.ENACTED)].config,
            length_normalize=bool(meta["length_normalize"]),
        )
        return cls(body, title, priors, config)


def _bill_sentences(bill: BillRecord, policy: SnapshotPolicy, channel: Channel) -> list[list[str]]:
    if channel is Channel.TITLE:
        tokens = tokenize(normalize_text(bill.title))
        return [tokens] if tokens else []
    snapshot = select_snapshot(bill, policy)
    sentences = []
    for sentence in split_sentences(snapshot.text):
        tokens = tokenize(sentence)
        if tokens:
            sentences.append(tokens)
    return sentences


def fit_inversion(
    bills: list[BillRecord],
    policy: SnapshotPolicy,
    config: InversionConfig,
    seed: int = 1,
) -> InversionClassifier:
    """Train the eight class-conditional models and populate priors.

    Documents that are empty after normalization are excluded from
    training. A (chamber, outcome) cell with no usable bills is an error.
    """
    cells: dict[tuple[Chamber, Outcome], dict[Channel, list[list[str]]]] = {
        (c, o): {Channel.BODY: [], Channel.TITLE: []} for c in Chamber for o in Outcome
    }
    max_congress = max(b.congress for b in bills)
    for bill in bills:
        cell = cells[(bill.chamber, bill.outcome)]
        cell[Channel.BODY].extend(_bill_sentences(bill, policy, Channel.BODY))
        cell[Channel.TITLE].extend(_bill_sentences(bill, policy, Channel.TITLE))

    body_models: dict[tuple[Chamber, Outcome], EmbeddingModel] = {}
    title_models: dict[tuple[Chamber, Outcome], EmbeddingModel] = {}
    for (chamber, outcome), channels in cells.items():
        for channel, store in ((Channel.BODY, body_models), (Channel.TITLE, title_models)):
            sentences = channels[channel]
            if not sentences:
                raise ValueError(
                    f"no trainable {channel.value} text for cell "
                    f"({chamber.value}, {outcome.value})"
                )
            base = config.body if channel is Channel.BODY else config.title
            cfg = TrainConfig(
                dim=base.dim,
                window=base.window,
                epochs=base.epochs,
                rate=base.rate,
                min_count=base.min_count,
                seed=derive_seed(seed, f"inversion/{channel.value}/{chamber.value}/{outcome.value}"),
                rate_floor_fraction=base.rate_floor_fraction,
            )
            store[(chamber, outcome)] = train_cbow(sentences, cfg)

    priors = compute_priors(bills, max_congress + 1)
    return InversionClassifier(body_models, title_models, priors, config)


def _shared_loglikelihoods(
    model_e: EmbeddingModel, model_f: EmbeddingModel, tokens: list[str]
) -> tuple[float, float, int] | None:
    """Log-likelihood of the sentence under each model over shared positions."""
    idx_e = model_e.vocab.index
    idx_f = model_f.vocab.index
    shared = [t for t in tokens if t in idx_e and t in idx_f]
    if len(shared) < 2:  # a scoreable position needs a target plus context
        return None
    seq_e = np.array([idx_e[t] for t in shared], dtype=np.int32)
    seq_f = np.array([idx_f[t] for t in shared], dtype=np.int32)
    ll_e, n_e = sequence_loglik(model_e, seq_e)
    ll_f, n_f = sequence_loglik(model_f, seq_f)
    assert n_e == n_f
    return ll_e, ll_f, n_e


def posterior_from_loglik(ll_e: float, ll_f: float, prior: float) -> float:
    """Stable Bayes combination: prior odds times likelihood ratio."""
    log_odds = math.log(prior) - math.log1p(-prior) + (ll_e - ll_f)
    if log_odds >= 0:
        return 1.0 / (1.0 + math.exp(-log_odds))
    e = math.exp(log_odds)
    return e / (1.0 + e)


def sentence_posterior(
    clf: InversionClassifier,
    chamber: Chamber,
    tokens: list[str],
    channel: Channel = Channel.BODY,
) -> float | None:
    """Posterior enactment probability of one sentence, or None if unscoreable."""
    model_e, model_f = clf.models(chamber, channel)
    scored = _shared_loglikelihoods(model_e, model_f, tokens)
    if scored is None:
        return None
    ll_e, ll_f, n = scored
    if clf.config.length_normalize and n > 0:
        ll_e, ll_f = ll_e / n, ll_f / n
    return posterior_from_loglik(ll_e, ll_f, clf.priors.get(chamber))


def bill_probability(
    clf: InversionClassifier,
    bill: BillRecord,
    policy: SnapshotPolicy,
    channel: Channel = Channel.BODY,
) -> BillScore:
    """Mean of per-sentence posteriors; unscoreable sentences contribute the prior.

    A bill with no sentences at all (empty after normalization) gets the
    chamber prior, flagged.
    """
    prior = clf.priors.get(bill.chamber)
    sentences = _bill_sentences(bill, policy, channel)
    if not sentences:
        return BillScore(prior, [], 0, prior_fallback=True)
    posteriors: list[float] = []
    n_unscoreable = 0
    for tokens in sentences:
        p = sentence_posterior(clf, bill.chamber, tokens, channel)
        if p is None:
            n_unscoreable += 1
            p = prior
        posteriors.append(p)
    return BillScore(
        probability=sum(posteriors) / len(posteriors),
        sentence_posteriors=posteriors,
        n_unscoreable=n_unscoreable,
    )
