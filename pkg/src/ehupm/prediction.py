"""Pattern-based prediction of a binary object facet.

The pipeline mines frequent itemsets, keeps (pattern, transaction-facet)
pairs whose facet correlates with the target object facet across the
pattern's supporting transactions, fits a per-pair linear regression, and
combines the per-pair estimates for an unseen transaction with a weighted
mean.  Each pair's weight is |correlation| * support: a strong correlation
is a good predictor, but only if enough transactions back it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DatasetError, EvaluationUndefined, SpecError
from .miner import AllItems, ItemFilter, Pattern, frequent_itemsets, useful_items
from .model import Dataset, Transaction
from .utility import linear_fit, pearson_xy


def _clamp01(value: float) -> float:
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class PatternPredictor:
    """One fitted (pattern, facet) pair.

    `support` is the number of supporting transactions, `correlation` the
    signed Pearson coefficient between the facet and the target object facet
    over them, and slope/intercept the least-squares fit of the target on
    the facet.  Estimates are clamped to [0, 1]."""

    pattern: Pattern
    facet: int
    support: int
    correlation: float
    slope: float
    intercept: float

    def estimate(self, value: float) -> float:
        return _clamp01(self.intercept + self.slope * value)

    @property
    def weight(self) -> float:
        return abs(self.correlation) * self.support


@dataclass(frozen=True)
class PredictorSet:
    """The fitted predictors plus the thresholds used to build them."""

    predictors: tuple[PatternPredictor, ...]
    min_occurrences: int
    min_abs_correlation: float
    object_facet: int

    def __post_init__(self):
        keys = [(p.pattern, p.facet) for p in self.predictors]
        if len(set(keys)) != len(keys):
            raise SpecError("duplicate (pattern, facet) pair in predictor set")

    def patterns(self) -> tuple[Pattern, ...]:
        """Distinct patterns, in first-seen order."""
        seen: dict[Pattern, None] = {}
        for predictor in self.predictors:
            seen.setdefault(predictor.pattern, None)
        return tuple(seen)

    def to_text(self) -> str:
        """Line-oriented persistence: pattern items (comma-joined), facet
        index, support, correlation, slope, intercept, tab-separated."""
        lines = [
            "# pattern\tfacet\tsupport\tcorrelation\tslope\tintercept",
            f"#meta min_occurrences={self.min_occurrences} "
            f"min_abs_correlation={self.min_abs_correlation!r} object_facet={self.object_facet}",
        ]
        for p in self.predictors:
            for item in p.pattern.items:
                if "," in item or "\t" in item:
                    raise SpecError(f"item id {item!r} cannot be serialized (contains ',' or tab)")
            lines.append(
                "\t".join(
                    (
                        ",".join(p.pattern.items),
                        str(p.facet),
                        str(p.support),
                        repr(p.correlation),
                        repr(p.slope),
                        repr(p.intercept),
                    )
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PredictorSet":
        min_occurrences = 1
        min_abs_correlation = 0.0
        object_facet = 0
        predictors = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#meta"):
                for token in line[len("#meta"):].split():
                    key, _, value = token.partition("=")
                    if key == "min_occurrences":
                        min_occurrences = int(value)
                    elif key == "min_abs_correlation":
                        min_abs_correlation = float(value)
                    elif key == "object_facet":
                        object_facet = int(value)
                continue
            if line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 6:
                raise SpecError(f"malformed predictor line: {raw!r}")
            items, facet, support, correlation, slope, intercept = fields
            predictors.append(
                PatternPredictor(
                    Pattern.itemset(*items.split(",")),
                    int(facet),
                    int(support),
                    float(correlation),
                    float(slope),
                    float(intercept),
                )
            )
        return cls(tuple(predictors), min_occurrences, min_abs_correlation, object_facet)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.to_text())

    @classmethod
    def load(cls, path) -> "PredictorSet":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_text(handle.read())


def build_predictors(
    dataset: Dataset,
    target_facets: Sequence[int] | None = None,
    object_facet: int = 0,
    min_occurrences: int = 1,
    min_abs_correlation: float = 0.5,
    max_size: int = 3,
    item_filter: ItemFilter = AllItems(),
) -> PredictorSet:
    """Mine frequent itemsets and fit one predictor per (pattern, facet)
    pair whose absolute correlation with the object facet reaches the
    threshold.  Pairs with undefined correlation are skipped."""
    if dataset.dims.object <= object_facet:
        raise DatasetError(
            f"object facet {object_facet} out of range (objects have {dataset.dims.object} facets)"
        )
    if target_facets is None:
        target_facets = range(dataset.dims.transaction)
    else:
        for j in target_facets:
            if not 0 <= j < dataset.dims.transaction:
                raise SpecError(f"target facet {j} out of range")

    items = useful_items(dataset, item_filter)
    predictors = []
    for pattern, tids in frequent_itemsets(dataset, min_occurrences, max_size, items):
        supporting = [dataset.transaction(tid) for tid in tids]
        target = [dataset.objects[t.object].facets[object_facet] for t in supporting]
        for j in target_facets:
            values = [t.facets[j] for t in supporting]
            try:
                correlation = pearson_xy(values, target)
            except EvaluationUndefined:
                continue
            if abs(correlation) < min_abs_correlation:
                continue
            slope, intercept = linear_fit(values, target)
            predictors.append(
                PatternPredictor(pattern, j, len(tids), correlation, slope, intercept)
            )
    return PredictorSet(tuple(predictors), min_occurrences, min_abs_correlation, object_facet)


def predict(predictor_set: PredictorSet, transaction: Transaction) -> float | None:
    """Weighted-mean estimate over the predictors whose pattern the
    transaction supports, or None when no predictor applies."""
    numerator = 0.0
    denominator = 0.0
    for p in predictor_set.predictors:
        if not set(p.pattern.items) <= transaction.item_set:
            continue
        weight = p.weight
        if weight <= 0:
            continue
        if p.facet >= len(transaction.facets):
            raise DatasetError(f"transaction {transaction.id!r} lacks facet {p.facet}")
        numerator += p.estimate(transaction.facets[p.facet]) * weight
        denominator += weight
    if denominator == 0.0:
        return None
    return numerator / denominator


def classify(estimate: float) -> int:
    """Round an estimate in [0, 1] to a class: 1 at or above 0.5, else 0."""
    return 1 if estimate >= 0.5 else 0


@dataclass(frozen=True)
class FoldReport:
    fold: int
    total: int
    attempted: int
    exact: int
    missing: int
    accuracy: float
    missing_rate: float
    flagged: bool  # no prediction was attempted in this fold


@dataclass(frozen=True)
class CVReport:
    """Cross-validation outcome: per-fold reports, the mean and population
    variance of fold accuracies, and the pooled missing rate (fraction of
    test transactions with no prediction)."""

    folds: tuple[FoldReport, ...]
    mean_accuracy: float
    accuracy_variance: float
    missing_rate: float


def cross_validate(
    dataset: Dataset,
    folds: int = 5,
    seed: int = 0,
    target_facets: Sequence[int] | None = None,
    object_facet: int = 0,
    min_occurrences: int = 1,
    min_abs_correlation: float = 0.5,
    max_size: int = 3,
    item_filter: ItemFilter = AllItems(),
) -> CVReport:
    """K-fold evaluation of the prediction pipeline.

    Folds partition objects, not transactions, so no object's transactions
    leak between training and test.  A prediction is exact when its class
    equals the object's target facet value.  A fold where no prediction was
    attempted contributes accuracy 0 and is flagged."""
    if folds < 2:
        raise SpecError("cross-validation needs at least 2 folds")
    object_ids = sorted(dataset.objects)
    rng = random.Random(seed)
    shuffled = list(object_ids)
    rng.shuffle(shuffled)
    assignments = [shuffled[i::folds] for i in range(folds)]

    reports = []
    total_missing = 0
    total_transactions = 0
    for fold, test_objects in enumerate(assignments):
        train_objects = [oid for oid in shuffled if oid not in set(test_objects)]
        has_train = any(t.object in set(train_objects) for t in dataset.transactions)
        if train_objects and has_train:
            train = dataset.restrict_to_objects(train_objects)
            predictors = build_predictors(
                train,
                target_facets=target_facets,
                object_facet=object_facet,
                min_occurrences=min_occurrences,
                min_abs_correlation=min_abs_correlation,
                max_size=max_size,
                item_filter=item_filter,
            )
        else:
            predictors = PredictorSet((), min_occurrences, min_abs_correlation, object_facet)

        test_set = set(test_objects)
        attempted = 0
        exact = 0
        missing = 0
        total = 0
        for transaction in dataset.transactions:
            if transaction.object not in test_set:
                continue
            total += 1
            estimate = predict(predictors, transaction)
            if estimate is None:
                missing += 1
                continue
            attempted += 1
            truth = dataset.objects[transaction.object].facets[object_facet]
            if float(classify(estimate)) == truth:
                exact += 1
        accuracy = exact / attempted if attempted else 0.0
        missing_rate = missing / total if total else 0.0
        reports.append(
            FoldReport(fold, total, attempted, exact, missing, accuracy, missing_rate, attempted == 0)
        )
        total_missing += missing
        total_transactions += total

    accuracies = [r.accuracy for r in reports]
    mean_accuracy = sum(accuracies) / len(accuracies)
    accuracy_variance = sum((a - mean_accuracy) ** 2 for a in accuracies) / len(accuracies)
    missing_rate = total_missing / total_transactions if total_transactions else 0.0
    return CVReport(tuple(reports), mean_accuracy, accuracy_variance, missing_rate)


@dataclass(frozen=True)
class CoverageMetrics:
    """How much of the database the predictor patterns reach: the fraction
    of transactions supported by at least one pattern, and the fraction of
    distinct transaction item-sets covered by at least one pattern."""

    transaction_coverage: float
    combination_coverage: float


def coverage_metrics(dataset: Dataset, patterns: Iterable[Pattern]) -> CoverageMetrics:
    pattern_sets = [set(p.items) for p in patterns]
    transactions = dataset.transactions

    def covered(item_set: frozenset[str]) -> bool:
        return any(ps <= item_set for ps in pattern_sets)

    covered_transactions = sum(1 for t in transactions if covered(t.item_set))
    combinations = {t.item_set for t in transactions}
    covered_combinations = sum(1 for combo in combinations if covered(combo))
    return CoverageMetrics(
        transaction_coverage=covered_transactions / len(transactions),
        combination_coverage=covered_combinations / len(combinations) if combinations else 0.0,
    )
