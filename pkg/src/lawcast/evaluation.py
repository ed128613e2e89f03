"""Probability scoring, model comparison, and the walk-forward plan.

Log loss is unclipped by default, so a 0/1 prediction on the wrong side
scores infinity; AUC uses the rank-statistic form (ties credited half),
which equals the trapezoid area under the ROC curve; model comparisons use
a one-sided Welch t-test on per-bill losses with infinite losses excluded
and counted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import stats

from .corpus import BillRecord, Chamber, Outcome
from .inversion import compute_priors


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------


def log_loss(p: float, y: int, clip: bool = False) -> float:
    """-[y ln p + (1-y) ln(1-p)]; infinite when p is 0/1 on the wrong side.

    ``clip=True`` bounds p away from 0 and 1 by 1e-15 for finite output.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if y not in (0, 1):
        raise ValueError(f"outcome {y} not binary")
    if clip:
        p = min(max(p, 1e-15), 1.0 - 1e-15)
    q = p if y == 1 else 1.0 - p
    if q == 0.0:
        return math.inf
    return -math.log(q)


def brier(p: float, y: int) -> float:
    """(p - y)^2, in [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if y not in (0, 1):
        raise ValueError(f"outcome {y} not binary")
    return (p - y) ** 2


def log_loss_vector(ps: np.ndarray, ys: np.ndarray, clip: bool = False) -> np.ndarray:
    ps = np.asarray(ps, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if ps.min() < 0 or ps.max() > 1:
        raise ValueError("probabilities outside [0, 1]")
    if clip:
        ps = np.clip(ps, 1e-15, 1.0 - 1e-15)
    q = np.where(ys == 1, ps, 1.0 - ps)
    with np.errstate(divide="ignore"):
        return -np.log(q)


def auc(ps: np.ndarray, ys: np.ndarray) -> float:
    """P(random positive outranks random negative), ties counted half."""
    ps = np.asarray(ps, dtype=np.float64)
    ys = np.asarray(ys)
    n_pos = int(np.sum(ys == 1))
    n_neg = int(np.sum(ys == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = stats.rankdata(ps)  # midranks
    pos_rank_sum = float(ranks[ys == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def null_baseline(history: list[BillRecord], chamber: Chamber) -> float:
    """The chamber's historical enactment proportion as a predicted probability."""
    if not history:
        raise ValueError("empty history")
    predicted = max(b.congress for b in history) + 1
    return compute_priors(history, predicted).get(chamber)


@dataclass
class ComparisonResult:
    p_value: float
    t_statistic: float
    df: float
    n_a: int
    n_b: int
    n_excluded_a: int
    n_excluded_b: int


def compare_models(
    losses_a: Iterable[float], losses_b: Iterable[float], alternative: str = "a_less"
) -> ComparisonResult:
    """Welch two-sample t-test, one-sided for mean(A) < mean(B).

    Infinite losses are excluded and reported in the result rather than
    aggregated.
    """
    if alternative != "a_less":
        raise ValueError(f"unsupported alternative {alternative!r}")
    a = np.asarray(list(losses_a), dtype=np.float64)
    b = np.asarray(list(losses_b), dtype=np.float64)
    finite_a = a[np.isfinite(a)]
    finite_b = b[np.isfinite(b)]
    if finite_a.size < 2 or finite_b.size < 2:
        raise ValueError("need at least two finite losses per model")
    va = float(np.var(finite_a, ddof=1))
    vb = float(np.var(finite_b, ddof=1))
    if va == 0.0 and vb == 0.0:
        raise ValueError("zero variance in both loss vectors")
    na, nb = finite_a.size, finite_b.size
    se = math.sqrt(va / na + vb / nb)
    t_stat = (float(finite_a.mean()) - float(finite_b.mean())) / se
    df_num = (va / na + vb / nb) ** 2
    df_den = 0.0
    if va > 0:
        df_den += (va / na) ** 2 / (na - 1)
    if vb > 0:
        df_den += (vb / nb) ** 2 / (nb - 1)
    df = df_num / df_den
    p = float(stats.t.cdf(t_stat, df))
    return ComparisonResult(
        p_value=p,
        t_statistic=t_stat,
        df=df,
        n_a=na,
        n_b=nb,
        n_excluded_a=a.size - na,
        n_excluded_b=b.size - nb,
    )


# ---------------------------------------------------------------------------
# Prediction bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class PredictionRow:
    bill_id: str
    congress: int
    chamber: Chamber
    subject: str
    outcome: Outcome
    model: str
    policy: str
    probability: float


@dataclass
class PredictionSet:
    rows: list[PredictionRow] = field(default_factory=list)

    def extend(self, rows: Iterable[PredictionRow]) -> None:
        self.rows.extend(rows)

    def filter(self, **conditions) -> "PredictionSet":
        selected = self.rows
        for key, value in conditions.items():
            selected = [r for r in selected if getattr(r, key) == value]
        return PredictionSet(list(selected))

    def probabilities(self) -> np.ndarray:
        return np.array([r.probability for r in self.rows])

    def outcomes(self) -> np.ndarray:
        return np.array([1 if r.outcome is Outcome.ENACTED else 0 for r in self.rows])

    def models(self) -> list[str]:
        return sorted({r.model for r in self.rows})

    def congresses(self) -> list[int]:
        return sorted({r.congress for r in self.rows})

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["bill_id", "congress", "chamber", "subject", "outcome", "model", "policy", "probability"]
            )
            for r in self.rows:
                writer.writerow(
                    [
                        r.bill_id,
                        r.congress,
                        r.chamber.value,
                        r.subject,
                        r.outcome.value,
                        r.model,
                        r.policy,
                        format(r.probability, ".17g"),
                    ]
                )

    @classmethod
    def read_csv(cls, path: str | Path) -> "PredictionSet":
        rows = []
        with open(path, "r", newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                rows.append(
                    PredictionRow(
                        bill_id=rec["bill_id"],
                        congress=int(rec["congress"]),
                        chamber=Chamber(rec["chamber"]),
                        subject=rec["subject"],
                        outcome=Outcome(rec["outcome"]),
                        model=rec["model"],
                        policy=rec["policy"],
                        probability=float(rec["probability"]),
                    )
                )
        return cls(rows)


@dataclass
class SubjectErrorReport:
    ranking: list[tuple[str, float]]  # (subject, mean log loss), descending
    flagged: list[str]  # subjects containing an infinite loss


def error_by_subject(preds: PredictionSet) -> SubjectErrorReport:
    """Mean unclipped log loss per subject, worst first; subjects with any
    infinite loss are flagged and excluded from the finite ranking."""
    losses: dict[str, list[float]] = {}
    for row in preds.rows:
        y = 1 if row.outcome is Outcome.ENACTED else 0
        losses.setdefault(row.subject, []).append(log_loss(row.probability, y))
    flagged = sorted(s for s, ls in losses.items() if any(math.isinf(x) for x in ls))
    finite = [
        (s, float(np.mean(ls))) for s, ls in losses.items() if not any(math.isinf(x) for x in ls)
    ]
    finite.sort(key=lambda item: (-item[1], item[0]))
    return SubjectErrorReport(ranking=finite, flagged=flagged)


# ---------------------------------------------------------------------------
# Walk-forward plan
# ---------------------------------------------------------------------------


@dataclass
class WalkForwardPlan:
    """Language models train from 103, base learners from 104, tests from 107."""

    lm_start: int = 103
    base_start: int = 104
    first_test: int = 107

    def test_congresses(self, corpus_min: int, corpus_max: int) -> list[int]:
        # a test congress needs at least one LM congress and one base congress
        # strictly before it
        feasible = max(self.first_test, corpus_min + 2, self.base_start + 1)
        if corpus_max < feasible:
            raise ValueError(
                f"corpus through congress {corpus_max} cannot be tested; "
                f"first feasible test congress is {feasible}"
            )
        return list(range(feasible, corpus_max + 1))


@dataclass
class MetricsRow:
    model: str
    policy: str
    congress: str  # a congress number or "all"
    auc: float
    mean_brier: float
    mean_logloss: float
    n: int
    n_infinite: int


def metrics_table(preds: PredictionSet) -> list[MetricsRow]:
    """Per-model, per-congress metrics plus a pooled "all" row per model."""
    out: list[MetricsRow] = []
    for model in preds.models():
        by_model = preds.filter(model=model)
        policies = sorted({r.policy for r in by_model.rows})
        for policy in policies:
            subset = by_model.filter(policy=policy)
            groups: list[tuple[str, PredictionSet]] = [
                (str(c), subset.filter(congress=c)) for c in subset.congresses()
            ]
            groups.append(("all", subset))
            for label, group in groups:
                ps, ys = group.probabilities(), group.outcomes()
                ll = log_loss_vector(ps, ys)
                finite = np.isfinite(ll)
                out.append(
                    MetricsRow(
                        model=model,
                        policy=policy,
                        congress=label,
                        auc=auc(ps, ys),
                        mean_brier=float(np.mean((ps - ys) ** 2)),
                        mean_logloss=float(np.mean(ll[finite])) if finite.any() else math.inf,
                        n=len(group.rows),
                        n_infinite=int((~finite).sum()),
                    )
                )
    return out


def write_metrics_csv(rows: list[MetricsRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "policy", "congress", "auc", "mean_brier", "mean_logloss", "n", "n_infinite"])
        for r in rows:
            writer.writerow(
                [
                    r.model,
                    r.policy,
                    r.congress,
                    format(r.auc, ".17g"),
                    format(r.mean_brier, ".17g"),
                    format(r.mean_logloss, ".17g") if math.isfinite(r.mean_logloss) else "inf",
                    r.n,
                    r.n_infinite,
                ]
            )


def improvement_over_null(rows: list[MetricsRow]) -> list[tuple[str, str, str, float]]:
    """(model, policy, measure, percent improvement vs the null model), the
    plot-data for a percent-improvement figure. Positive is better."""
    null_rows = {(r.policy, r.congress): r for r in rows if r.model == "null"}
    out = []
    for r in rows:
        if r.model == "null" or r.congress != "all":
            continue
        base = null_rows.get((r.policy, "all"))
        if base is None:
            continue
        out.append((r.model, r.policy, "auc", 100.0 * (r.auc - base.auc) / base.auc))
        out.append(
            (r.model, r.policy, "brier", 100.0 * (base.mean_brier - r.mean_brier) / base.mean_brier)
        )
        if math.isfinite(r.mean_logloss) and math.isfinite(base.mean_logloss):
            out.append(
                (
                    r.model,
                    r.policy,
                    "logloss",
                    100.0 * (base.mean_logloss - r.mean_logloss) / base.mean_logloss,
                )
            )
    return out
