"""End-to-end model fitting and the walk-forward harness.

Model specs mirror the experiment's five conditions:

* ``null`` — chamber-specific historical enactment rate;
* ``text_only`` — Bayes inversion over full bill text;
* ``title_only`` — the same over titles;
* ``context_only`` — stacked ensemble on contextual variables;
* ``combined`` — the stacked ensemble with the body and title inversion
  probabilities appended as two extra predictors.

Text-score columns for training rows come from per-congress inversion
classifiers fit on strictly earlier congresses, so no row is ever scored
by a model that saw it. Those per-congress fits are cached and shared
across test congresses.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import BillRecord, SnapshotPolicy
from .ensemble import StackedEnsemble, StackingConfig, stacked_fit, stacked_predict
from .evaluation import PredictionRow, PredictionSet, WalkForwardPlan
from .features import (
    ChamberComposition,
    CommitteeTable,
    DesignBuilder,
    HistoryIndex,
    Imputer,
    build_features,
)
from .inversion import (
    Channel,
    InversionClassifier,
    InversionConfig,
    PriorTable,
    bill_probability,
    compute_priors,
    fit_inversion,
)
from .seeding import derive_seed

logger = logging.getLogger(__name__)

MODEL_SPECS = ("null", "context_only", "text_only", "title_only", "combined")


@dataclass
class CorpusBundle:
    """Bills plus the committee and composition tables features need."""

    bills: list[BillRecord]
    membership: CommitteeTable = field(default_factory=CommitteeTable)
    composition: ChamberComposition = field(default_factory=ChamberComposition)

    def congress_range(self) -> tuple[int, int]:
        congresses = [b.congress for b in self.bills]
        return min(congresses), max(congresses)

    def in_congresses(self, lo: int, hi: int) -> list[BillRecord]:
        return [b for b in self.bills if lo <= b.congress <= hi]

    @classmethod
    def from_synthetic(cls, corpus) -> "CorpusBundle":
        membership = CommitteeTable()
        for congress, committee, member, code, start in corpus.membership_rows:
            membership.add(congress, committee, member, code, start)
        composition = ChamberComposition()
        from .corpus import Chamber

        for congress, chamber, party, seats in corpus.composition_rows:
            composition.add(congress, Chamber(chamber), party, seats)
        return cls(bills=list(corpus.bills), membership=membership, composition=composition)


@dataclass
class PipelineConfig:
    inversion: InversionConfig = field(default_factory=InversionConfig)
    stacking: StackingConfig = field(default_factory=StackingConfig)
    plan: WalkForwardPlan = field(default_factory=WalkForwardPlan)
    seed: int = 1


class InversionCache:
    """Per-congress inversion classifiers, each trained on lm_start..c-1.

    The classifier used to *predict* congress c is identical to the one
    that produces training-time text scores for congress-c rows, so it is
    computed once and reused across walk-forward steps.
    """

    def __init__(self, corpus: CorpusBundle, policy: SnapshotPolicy, config: PipelineConfig):
        self.corpus = corpus
        self.policy = policy
        self.config = config
        self._classifiers: dict[int, InversionClassifier] = {}
        self._scores: dict[int, dict[str, tuple[float, float]]] = {}

    def classifier_for(self, congress: int) -> InversionClassifier:
        if congress not in self._classifiers:
            training = self.corpus.in_congresses(self.config.plan.lm_start, congress - 1)
            if not training:
                raise ValueError(f"no language-model history before congress {congress}")
            logger.info("fitting inversion for congress %d on %d bills", congress, len(training))
            self._classifiers[congress] = fit_inversion(
                training,
                self.policy,
                self.config.inversion,
                seed=derive_seed(self.config.seed, f"inversion/{congress}"),
            )
        return self._classifiers[congress]

    def scores_for(self, congress: int) -> dict[str, tuple[float, float]]:
        """bill_id -> (body probability, title probability) for that congress's
        bills, scored out-of-time."""
        if congress not in self._scores:
            clf = self.classifier_for(congress)
            scores: dict[str, tuple[float, float]] = {}
            for bill in self.corpus.in_congresses(congress, congress):
                body = bill_probability(clf, bill, self.policy, Channel.BODY).probability
                title = bill_probability(clf, bill, self.policy, Channel.TITLE).probability
                scores[bill.bill_id] = (body, title)
            self._scores[congress] = scores
        return self._scores[congress]


def _feature_rows(
    corpus: CorpusBundle,
    bills: list[BillRecord],
    policy: SnapshotPolicy,
):
    """Context features for the given bills, with per-congress history built
    only from strictly earlier bills (no leakage into cumulative fields)."""
    out = {}
    for congress in sorted({b.congress for b in bills}):
        prior = [b for b in corpus.bills if b.congress < congress]
        history = HistoryIndex.build(prior, corpus.membership, corpus.composition)
        for bill in bills:
            if bill.congress == congress:
                out[bill.bill_id] = build_features(bill, corpus.membership, history, policy)
    return [out[b.bill_id] for b in bills]


@dataclass
class TrainedModel:
    """Everything needed to predict one test congress under one spec."""

    spec: str
    policy: SnapshotPolicy
    test_congress: int
    priors: PriorTable
    classifier: InversionClassifier | None = None
    ensemble: StackedEnsemble | None = None
    builder: DesignBuilder | None = None
    imputer: Imputer | None = None

    @property
    def uses_text(self) -> bool:
        return self.spec in ("text_only", "title_only", "combined")

    @property
    def uses_context(self) -> bool:
        return self.spec in ("context_only", "combined")


def fit_model(
    corpus: CorpusBundle,
    test_congress: int,
    spec: str,
    policy: SnapshotPolicy,
    config: PipelineConfig,
    cache: InversionCache | None = None,
) -> TrainedModel:
    """Train one spec to predict ``test_congress`` from strictly earlier data."""
    if spec not in MODEL_SPECS:
        raise ValueError(f"unknown model spec {spec!r}; choose from {MODEL_SPECS}")
    history = corpus.in_congresses(config.plan.lm_start, test_congress - 1)
    if not history:
        raise ValueError(f"no history before congress {test_congress}")
    priors = compute_priors(history, test_congress)
    model = TrainedModel(spec=spec, policy=policy, test_congress=test_congress, priors=priors)
    if spec == "null":
        return model

    if cache is None:
        cache = InversionCache(corpus, policy, config)
    model.classifier = cache.classifier_for(test_congress)
    if spec in ("text_only", "title_only"):
        return model

    train_bills = corpus.in_congresses(config.plan.base_start, test_congress - 1)
    if not train_bills:
        raise ValueError(f"no base-learner history before congress {test_congress}")
    features = _feature_rows(corpus, train_bills, policy)
    text_scores = None
    if spec == "combined":
        text_scores = np.array(
            [cache.scores_for(b.congress)[b.bill_id] for b in train_bills]
        )
    builder = DesignBuilder().fit(features)
    matrix = builder.transform(features, text_scores, with_interactions=True)
    imputer = Imputer().fit(matrix)
    matrix = imputer.transform(matrix)
    y = np.array([1.0 if b.outcome.value == "enacted" else 0.0 for b in train_bills])
    stacking = replace(
        config.stacking, seed=derive_seed(config.seed, f"stack/{spec}/{test_congress}")
    )
    t0 = time.time()
    model.ensemble = stacked_fit(matrix.X, y, stacking)
    logger.info(
        "stacked fit for %s@%d on %d rows took %.1fs",
        spec,
        test_congress,
        len(train_bills),
        time.time() - t0,
    )
    model.builder = builder
    model.imputer = imputer
    return model


def predict_bills(
    model: TrainedModel,
    corpus: CorpusBundle,
    bills: list[BillRecord],
    cache: InversionCache | None = None,
) -> np.ndarray:
    """Probabilities for bills of the model's test congress."""
    if model.spec == "null":
        return np.array([model.priors.get(b.chamber) for b in bills])
    if model.spec in ("text_only", "title_only"):
        channel = Channel.BODY if model.spec == "text_only" else Channel.TITLE
        assert model.classifier is not None
        return np.array(
            [
                bill_probability(model.classifier, b, model.policy, channel).probability
                for b in bills
            ]
        )
    assert model.ensemble is not None and model.builder is not None and model.imputer is not None
    features = _feature_rows(corpus, bills, model.policy)
    text_scores = None
    if model.spec == "combined":
        assert model.classifier is not None
        if cache is not None:
            scored = [cache.scores_for(b.congress)[b.bill_id] for b in bills]
        else:
            scored = [
                (
                    bill_probability(model.classifier, b, model.policy, Channel.BODY).probability,
                    bill_probability(model.classifier, b, model.policy, Channel.TITLE).probability,
                )
                for b in bills
            ]
        text_scores = np.array(scored)
    matrix = model.builder.transform(features, text_scores, with_interactions=True)
    matrix = model.imputer.transform(matrix)
    return stacked_predict(model.ensemble, matrix.X)


def walk_forward(
    corpus: CorpusBundle,
    specs: list[str],
    policy: SnapshotPolicy,
    config: PipelineConfig | None = None,
) -> PredictionSet:
    """Train on earlier congresses, predict the current one, advance, repeat.

    Returns one prediction row per (bill, spec). Models never see their own
    test congress: language models train on lm_start..t-1, base learners on
    base_start..t-1 with out-of-time text scores.
    """
    config = config or PipelineConfig()
    lo, hi = corpus.congress_range()
    tests = config.plan.test_congresses(lo, hi)
    for spec in specs:
        if spec not in MODEL_SPECS:
            raise ValueError(f"unknown model spec {spec!r}; choose from {MODEL_SPECS}")

    cache = InversionCache(corpus, policy, config)
    needs_text = any(s in ("text_only", "title_only", "combined") for s in specs)
    preds = PredictionSet()
    for t in tests:
        bills_t = corpus.in_congresses(t, t)
        if not bills_t:
            continue
        for spec in specs:
            model = fit_model(corpus, t, spec, policy, config, cache if needs_text else None)
            probs = predict_bills(model, corpus, bills_t, cache if needs_text else None)
            preds.extend(
                PredictionRow(
                    bill_id=b.bill_id,
                    congress=b.congress,
                    chamber=b.chamber,
                    subject=b.subjects_top_term,
                    outcome=b.outcome,
                    model=spec,
                    policy=policy.selector.value,
                    probability=float(p),
                )
                for b, p in zip(bills_t, probs)
            )
    return preds


# ---------------------------------------------------------------------------
# Model bundle persistence (train once, predict later)
# ---------------------------------------------------------------------------


def save_trained_model(model: TrainedModel, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "spec": model.spec,
        "policy": model.policy.selector.value,
        "test_congress": model.test_congress,
        "priors": {c.value: p for c, p in model.priors.priors.items()},
        "n_history": {c.value: n for c, n in model.priors.n_history.items()},
    }
    if model.builder is not None:
        meta["design"] = model.builder.to_dict()
    if model.imputer is not None:
        meta["imputer"] = model.imputer.to_dict()
    (directory / "model.json").write_text(json.dumps(meta, indent=1, sort_keys=True))
    if model.classifier is not None:
        model.classifier.save(directory / "inversion")
    if model.ensemble is not None:
        model.ensemble.save(directory / "ensemble")


def load_trained_model(directory: str | Path) -> TrainedModel:
    from .corpus import Chamber

    directory = Path(directory)
    meta = json.loads((directory / "model.json").read_text())
    priors = PriorTable(
        priors={Chamber(c): p for c, p in meta["priors"].items()},
        n_history={Chamber(c): n for c, n in meta["n_history"].items()},
    )
    policy = (
        SnapshotPolicy.oldest() if meta["policy"] == "oldest" else SnapshotPolicy.newest()
    )
    model = TrainedModel(
        spec=meta["spec"],
        policy=policy,
        test_congress=int(meta["test_congress"]),
        priors=priors,
    )
    if (directory / "inversion").exists():
        model.classifier = InversionClassifier.load(directory / "inversion")
    if (directory / "ensemble").exists():
        model.ensemble = StackedEnsemble.load(directory / "ensemble")
    if "design" in meta:
        model.builder = DesignBuilder.from_dict(meta["design"])
    if "imputer" in meta:
        model.imputer = Imputer.from_dict(meta["imputer"])
    return model
