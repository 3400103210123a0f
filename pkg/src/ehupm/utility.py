"""Occurrence utility vectors, pattern utility matrices, and the pattern
utility function library.

A pattern's utility matrix has one row per supporting transaction.  Each row
concatenates the intra-pattern item utility vector with the transaction,
object and container facet vectors, in that fixed order.  A utility function
collapses the matrix to a single number, either row-first (combine facets
within each occurrence, then across occurrences), column-first (combine each
facet across occurrences, then across facets), or on the whole matrix at
once.

Functions that are undefined on a given matrix (standard deviation of one
row, correlation of a constant column, ...) raise EvaluationUndefined rather
than returning NaN, so threshold comparisons stay total.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DatasetError, EvaluationUndefined, SpecError
from .model import Dataset, FacetDims, FacetVector, ItemId, Transaction, TransactionId


class Level(str, Enum):
    """Facet level of a matrix column."""

    ITEM = "item"
    TRANSACTION = "tx"
    OBJECT = "obj"
    CONTAINER = "cont"


@dataclass(frozen=True)
class ColumnRef:
    """Addresses one facet column: a level plus a zero-based facet index."""

    level: Level
    facet: int

    def __post_init__(self):
        if self.facet < 0:
            raise SpecError(f"facet index must be >= 0, got {self.facet}")

    def __str__(self) -> str:
        return f"{self.level.value}.{self.facet}"

    @classmethod
    def parse(cls, text: str) -> "ColumnRef":
        head, sep, tail = text.strip().partition(".")
        if not sep or not tail.isdigit():
            raise SpecError(f"expected a column like 'tx.2', got {text!r}")
        try:
            level = Level(head)
        except ValueError:
            raise SpecError(f"unknown facet level {head!r} (expected item/tx/obj/cont)") from None
        return cls(level, int(tail))


_OPS = {
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}

_CONDITION_RE = re.compile(r"^\s*([A-Za-z]+\.\d+)\s*(>=|<=|!=|>|<|=)\s*(-?\d+(?:\.\d+)?)\s*$")


@dataclass(frozen=True)
class Condition:
    """A facet comparison such as tx.2 > 0."""

    column: ColumnRef
    op: str
    value: float

    def __post_init__(self):
        if self.op not in _OPS:
            raise SpecError(f"unknown comparison operator {self.op!r}")

    def holds(self, value: float) -> bool:
        return _OPS[self.op](value, self.value)

    def __str__(self) -> str:
        value = int(self.value) if self.value == int(self.value) else self.value
        return f"{self.column}{self.op}{value}"

    @classmethod
    def parse(cls, text: str) -> "Condition":
        match = _CONDITION_RE.match(text)
        if not match:
            raise SpecError(f"expected a condition like 'tx.2>0', got {text!r}")
        return cls(ColumnRef.parse(match.group(1)), match.group(2), float(match.group(3)))


def value_at(dataset: Dataset, transaction: Transaction, column: ColumnRef) -> float:
    """Resolve a transaction/object/container facet for one transaction."""
    if column.level is Level.TRANSACTION:
        vector = transaction.facets
    elif column.level is Level.OBJECT:
        vector = dataset.objects[transaction.object].facets
    elif column.level is Level.CONTAINER:
        vector = dataset.containers[dataset.objects[transaction.object].container].facets
    else:
        raise SpecError("item-level facets are per item and cannot be resolved per transaction")
    if column.facet >= len(vector):
        raise SpecError(f"facet index out of range: {column} (level has {len(vector)} facets)")
    return vector[column.facet]


@dataclass(frozen=True)
class OccurrenceUtilityVector:
    """One matrix row: [intra-pattern item facets, transaction facets,
    object facets, container facets] for a supporting transaction."""

    transaction: TransactionId
    values: tuple[float, ...]
    dims: FacetDims

    def __post_init__(self):
        if len(self.values) != sum(self.dims):
            raise DatasetError(
                f"occurrence utility vector has {len(self.values)} values, expected {sum(self.dims)}"
            )

    def segment(self, level: Level) -> tuple[float, ...]:
        start = 0
        for lvl, size in zip(Level, self.dims):
            if lvl is level:
                return self.values[start : start + size]
            start += size
        raise SpecError(f"unknown level {level!r}")


@dataclass(frozen=True)
class PatternUtilityMatrix:
    """All occurrence utility vectors of a pattern, one row per supporting
    transaction in dataset order."""

    rows: tuple[OccurrenceUtilityVector, ...]
    dims: FacetDims

    def __post_init__(self):
        if not self.rows:
            raise ValueError("a pattern utility matrix needs at least one row")
        for row in self.rows:
            if row.dims != self.dims:
                raise DatasetError("matrix rows disagree on facet dimensions")

    @property
    def support(self) -> int:
        return len(self.rows)

    @property
    def transaction_ids(self) -> tuple[TransactionId, ...]:
        return tuple(row.transaction for row in self.rows)

    @cached_property
    def columns(self) -> tuple[ColumnRef, ...]:
        refs = []
        for level, size in zip(Level, self.dims):
            refs.extend(ColumnRef(level, k) for k in range(size))
        return tuple(refs)

    def column_index(self, ref: ColumnRef) -> int:
        offset = 0
        for level, size in zip(Level, self.dims):
            if level is ref.level:
                if ref.facet >= size:
                    raise SpecError(f"facet index out of range: {ref} (level has {size} facets)")
                return offset + ref.facet
            offset += size
        raise SpecError(f"unknown level {ref.level!r}")

    def column(self, ref: ColumnRef) -> np.ndarray:
        index = self.column_index(ref)
        return np.array([row.values[index] for row in self.rows], dtype=float)

    def values(self) -> np.ndarray:
        return np.array([row.values for row in self.rows], dtype=float)


_INTRA_AGGREGATORS = ("sum", "max", "min", "avg")


def _pattern_items(pattern) -> tuple[ItemId, ...]:
    """Accept either a Pattern-like object or a bare item sequence."""
    attr = getattr(pattern, "items", None)
    if attr is not None and not callable(attr):
        return tuple(attr)
    return tuple(pattern)


def intra_pattern_utility(
    items: Sequence[ItemId],
    transaction: Transaction,
    item_vectors: dict[ItemId, FacetVector],
    aggregator: str = "sum",
) -> tuple[float, ...]:
    """Merge the pattern items' utility vectors into one vector for a single
    occurrence.  Per facet, the per-item products value * quantity are
    combined with the chosen aggregator.  With no item facets the result is
    the empty vector."""
    if aggregator not in _INTRA_AGGREGATORS:
        raise SpecError(f"unknown intra-pattern aggregator {aggregator!r}")
    if not items:
        raise ValueError("intra-pattern utility needs a nonempty pattern")
    vectors = []
    for item in items:
        if item not in item_vectors:
            if not item_vectors:
                return ()
            raise DatasetError(f"missing item utility vector for {item!r}")
        vectors.append(item_vectors[item])
    width = len(vectors[0])
    if width == 0:
        return ()
    result = []
    for k in range(width):
        products = [vec[k] * transaction.quantity(item) for item, vec in zip(items, vectors)]
        if aggregator == "sum":
            result.append(sum(products))
        elif aggregator == "max":
            result.append(max(products))
        elif aggregator == "min":
            result.append(min(products))
        else:
            result.append(sum(products) / len(products))
    return tuple(result)


def occurrence_utility_vector(
    dataset: Dataset,
    pattern,
    transaction_id: TransactionId,
    intra: str = "sum",
) -> OccurrenceUtilityVector:
    """Build one matrix row for a transaction that supports the pattern.
    `pattern` may be a Pattern or a plain item sequence."""
    items = _pattern_items(pattern)
    transaction = dataset.transaction(transaction_id)
    if dataset.dims.item:
        iu = intra_pattern_utility(items, transaction, dataset.item_vectors, intra)
    else:
        iu = ()
    obj = dataset.objects[transaction.object]
    container = dataset.containers[obj.container]
    values = iu + transaction.facets + obj.facets + container.facets
    return OccurrenceUtilityVector(transaction.id, values, dataset.dims)


def pattern_utility_matrix(
    dataset: Dataset,
    pattern,
    transaction_ids: Iterable[TransactionId],
    intra: str = "sum",
) -> PatternUtilityMatrix:
    """Assemble the matrix over the given supporting transactions.  Rows
    follow the dataset's transaction order regardless of input order.
    `pattern` may be a Pattern or a plain item sequence."""
    items = _pattern_items(pattern)
    index = dataset.transaction_index
    ordered = sorted(set(transaction_ids), key=index.__getitem__)
    if not ordered:
        raise ValueError("a pattern utility matrix needs at least one supporting transaction")
    rows = tuple(occurrence_utility_vector(dataset, items, tid, intra) for tid in ordered)
    return PatternUtilityMatrix(rows, dataset.dims)


def _product(values) -> float:
    return float(math.prod(values))


_SCALAR_AGGS = {
    "sum": lambda v: float(sum(v)),
    "times": _product,
    "max": lambda v: float(max(v)),
    "min": lambda v: float(min(v)),
    "avg": lambda v: float(sum(v)) / len(v),
    "pct": lambda v: 100.0 * sum(1 for x in v if x != 0) / len(v),
}

_POLARITIES = ("pos", "neg", "either")

_ROW_FN_KINDS = ("filter", "sum", "times", "max", "min", "avg", "coherent", "disagree")

_COLUMN_AGGS = ("sum", "times", "max", "min", "avg", "std", "sstd", "fracpos", "fracneg")

_ACROSS_COLUMN_AGGS = ("sum", "times", "max", "min", "avg")


@dataclass(frozen=True)
class RowFn:
    """A per-occurrence (per-row) function over selected facet columns.

    `filter` projects one column; sum/times/max/min/avg combine the selected
    values; `coherent` yields a 0/1 indicator of same-sign values under the
    given polarity; `disagree` yields a 0/1 indicator of a condition pair."""

    kind: str
    columns: tuple[ColumnRef, ...] = ()
    polarity: str = "either"
    conditions: tuple[Condition, ...] = ()

    def __post_init__(self):
        if self.kind not in _ROW_FN_KINDS:
            raise SpecError(f"unknown row function {self.kind!r}")
        if self.kind == "disagree":
            if len(self.conditions) != 2 or self.columns:
                raise SpecError("disagree takes exactly two conditions")
        elif self.kind == "filter":
            if len(self.columns) != 1:
                raise SpecError("filter takes exactly one column")
        else:
            if not self.columns:
                raise SpecError(f"{self.kind} needs at least one column")
        if self.kind == "coherent" and self.polarity not in _POLARITIES:
            raise SpecError(f"unknown polarity {self.polarity!r}")

    def __str__(self) -> str:
        if self.kind == "disagree":
            return f"disagree({self.conditions[0]},{self.conditions[1]})"
        cols = ",".join(str(c) for c in self.columns)
        if self.kind == "coherent":
            return f"coherent({cols};{self.polarity})"
        return f"{self.kind}({cols})"


def _coherent(values: tuple[float, ...], polarity: str) -> bool:
    if polarity == "pos":
        return all(v > 0 for v in values)
    if polarity == "neg":
        return all(v < 0 for v in values)
    return all(v > 0 for v in values) or all(v < 0 for v in values)


@dataclass(frozen=True)
class UtilitySpec:
    """Identifies one concrete pattern utility function u(P), including the
    intra-pattern aggregator used to build item-facet matrix rows."""

    intra: str = field(default="sum", kw_only=True)

    def __post_init__(self):
        if self.intra not in _INTRA_AGGREGATORS:
            raise SpecError(f"unknown intra-pattern aggregator {self.intra!r}")

    @property
    def klass(self) -> str:
        raise NotImplementedError

    def evaluate(self, matrix: PatternUtilityMatrix) -> float:
        raise NotImplementedError

    def to_text(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class HorizontalFirst(UtilitySpec):
    """Row-first utility: apply `per_row` to every occurrence, then combine
    the per-occurrence values with `across_rows`."""

    per_row: RowFn
    across_rows: str

    def __post_init__(self):
        UtilitySpec.__post_init__(self)
        if self.across_rows not in _SCALAR_AGGS:
            raise SpecError(f"unknown aggregator {self.across_rows!r}")

    @property
    def klass(self) -> str:
        return "hfirst"

    def evaluate(self, matrix: PatternUtilityMatrix) -> float:
        fn = self.per_row
        if fn.kind == "disagree":
            cols = [matrix.column(c.column) for c in fn.conditions]
            per_row = [
                1.0 if all(cond.holds(float(col[i])) for cond, col in zip(fn.conditions, cols)) else 0.0
                for i in range(matrix.support)
            ]
        else:
            cols = [matrix.column(c) for c in fn.columns]
            per_row = []
            for i in range(matrix.support):
                row = tuple(float(col[i]) for col in cols)
                if fn.kind == "filter":
                    per_row.append(row[0])
                elif fn.kind == "coherent":
                    per_row.append(1.0 if _coherent(row, fn.polarity) else 0.0)
                else:
                    per_row.append(_SCALAR_AGGS[fn.kind](row))
        return float(_SCALAR_AGGS[self.across_rows](per_row))

    def to_text(self) -> str:
        return f"hfirst:{self.per_row}:{self.across_rows}"


def _column_value(kind: str, column: np.ndarray) -> float:
    if kind == "std":
        if len(column) < 2:
            raise EvaluationUndefined("standard deviation needs at least two occurrences")
        return float(np.std(column))
    if kind == "sstd":
        if len(column) < 2:
            raise EvaluationUndefined("sample standard deviation needs at least two occurrences")
        return float(np.std(column, ddof=1))
    if kind == "fracpos":
        return float(np.mean(column > 0))
    if kind == "fracneg":
        return float(np.mean(column < 0))
    return float(_SCALAR_AGGS[kind](column.tolist()))


@dataclass(frozen=True)
class VerticalFirst(UtilitySpec):
    """Column-first utility: collapse each selected facet column with
    `per_column`, then combine the per-facet values with `across_columns`."""

    per_column: str
    columns: tuple[ColumnRef, ...]
    across_columns: str

    def __post_init__(self):
        UtilitySpec.__post_init__(self)
        if self.per_column not in _COLUMN_AGGS:
            raise SpecError(f"unknown column aggregator {self.per_column!r}")
        if not self.columns:
            raise SpecError("vertical-first utility needs at least one column")
        if self.across_columns not in _ACROSS_COLUMN_AGGS:
            raise SpecError(f"unknown aggregator {self.across_columns!r}")

    @property
    def klass(self) -> str:
        return "vfirst"

    def evaluate(self, matrix: PatternUtilityMatrix) -> float:
        per_column = [_column_value(self.per_column, matrix.column(c)) for c in self.columns]
        return float(_SCALAR_AGGS[self.across_columns](per_column))

    def to_text(self) -> str:
        cols = ",".join(str(c) for c in self.columns)
        return f"vfirst:{self.per_column}({cols}):{self.across_columns}"


@dataclass(frozen=True)
class MixedCoherence(UtilitySpec):
    """Column-first coherence across levels: the fraction of occurrences
    matching the polarity is computed for each of the two columns, and the
    two fractions are multiplied.  Result lies in [0, 1]."""

    first: ColumnRef
    second: ColumnRef
    first_polarity: str = "pos"
    second_polarity: str = "pos"

    def __post_init__(self):
        UtilitySpec.__post_init__(self)
        for polarity in (self.first_polarity, self.second_polarity):
            if polarity not in ("pos", "neg"):
                raise SpecError(f"mixed coherence polarity must be pos or neg, got {polarity!r}")

    @property
    def klass(self) -> str:
        return "vfirst"

    def evaluate(self, matrix: PatternUtilityMatrix) -> float:
        fraction_first = _column_value("frac" + self.first_polarity, matrix.column(self.first))
        fraction_second = _column_value("frac" + self.second_polarity, matrix.column(self.second))
        return float(fraction_first * fraction_second)

    def to_text(self) -> str:
        return (
            f"vfirst:mixedcoherence({self.first},{self.second};"
            f"{self.first_polarity},{self.second_polarity})"
        )


@dataclass(frozen=True)
class PearsonSpec(UtilitySpec):
    """Whole-matrix utility: Pearson correlation between two facet columns."""

    x: ColumnRef
    y: ColumnRef

    @property
    def klass(self) -> str:
        return "mixed"

    def evaluate(self, matrix: PatternUtilityMatrix) -> float:
        return pearson(matrix, self.x, self.y)

    def to_text(self) -> str:
        return f"mixed:pearson({self.x},{self.y})"


@dataclass(frozen=True)
class MultipleCorrelationSpec(UtilitySpec):
    """Whole-matrix utility: multiple correlation coefficient of a target
    facet against one or more predictor facets."""

    predictors: tuple[ColumnRef, ...]
    target: ColumnRef

    def __post_init__(self):
        UtilitySpec.__post_init__(self)
        if not self.predictors:
            raise SpecError("multiple correlation needs at least one predictor column")

    @property
    def klass(self) -> str:
        return "mixed"

    def evaluate(self, matrix: PatternUtilityMatrix) -> float:
        return multiple_correlation(matrix, self.predictors, self.target)

    def to_text(self) -> str:
        cols = ",".join(str(c) for c in self.predictors)
        return f"mixed:multicorr({cols};{self.target})"


def evaluate(matrix: PatternUtilityMatrix, spec: UtilitySpec) -> float:
    """Evaluate u(P) on a pattern utility matrix under the given spec."""
    return spec.evaluate(matrix)


# Named function library.  Each is a thin, individually testable wrapper over
# the spec machinery (or over the statistics helpers below).

def filter_sum(matrix: PatternUtilityMatrix, column: ColumnRef) -> float:
    """Project one facet and sum it across occurrences."""
    return HorizontalFirst(RowFn("filter", (column,)), "sum").evaluate(matrix)


def filter_times(matrix: PatternUtilityMatrix, column: ColumnRef) -> float:
    """Project one facet and multiply it across occurrences."""
    return HorizontalFirst(RowFn("filter", (column,)), "times").evaluate(matrix)


def coherence_degree(
    matrix: PatternUtilityMatrix,
    columns: Sequence[ColumnRef],
    polarity: str = "either",
) -> float:
    """Percentage (0..100) of occurrences whose selected facets are coherent:
    all positive, all negative, or either, per the polarity."""
    return HorizontalFirst(RowFn("coherent", tuple(columns), polarity=polarity), "pct").evaluate(matrix)


def disagreement_degree(
    matrix: PatternUtilityMatrix,
    first: Condition,
    second: Condition,
) -> float:
    """Percentage (0..100) of occurrences satisfying both conditions, e.g. a
    positive transaction facet paired with a zero container facet."""
    return HorizontalFirst(RowFn("disagree", conditions=(first, second)), "pct").evaluate(matrix)


def max_sum(matrix: PatternUtilityMatrix, columns: Sequence[ColumnRef]) -> float:
    """Maximum of each selected facet across occurrences, summed."""
    return VerticalFirst("max", tuple(columns), "sum").evaluate(matrix)


def std_max(matrix: PatternUtilityMatrix, columns: Sequence[ColumnRef], sample: bool = False) -> float:
    """Standard deviation of each selected facet (population form unless
    `sample`), maximized across facets.  Undefined on fewer than two rows."""
    return VerticalFirst("sstd" if sample else "std", tuple(columns), "max").evaluate(matrix)


def mixed_coherence_degree(
    matrix: PatternUtilityMatrix,
    first: ColumnRef,
    second: ColumnRef,
    polarities: tuple[str, str] = ("pos", "pos"),
) -> float:
    """Product of the per-column fractions of occurrences matching each
    polarity; typically pairs a transaction facet with an object facet."""
    return MixedCoherence(first, second, polarities[0], polarities[1]).evaluate(matrix)


def pearson_xy(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of two equal-length samples.

    Raises EvaluationUndefined on fewer than two points or zero variance."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if len(xs) != len(ys):
        raise ValueError("samples must have equal length")
    if len(xs) < 2:
        raise EvaluationUndefined("correlation needs at least two occurrences")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        raise EvaluationUndefined("correlation is undefined on a constant column")
    return float(np.clip(float(dx @ dy) / denom, -1.0, 1.0))


def pearson(matrix: PatternUtilityMatrix, x: ColumnRef, y: ColumnRef) -> float:
    """Pearson correlation between two facet columns of the matrix."""
    return pearson_xy(matrix.column(x), matrix.column(y))


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares line y ~ slope * x + intercept.

    Raises EvaluationUndefined when x has zero variance."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if len(xs) < 2:
        raise EvaluationUndefined("a regression needs at least two points")
    dx = xs - xs.mean()
    ssx = float(dx @ dx)
    if ssx == 0.0:
        raise EvaluationUndefined("regression is undefined on a constant predictor")
    slope = float(dx @ (ys - ys.mean())) / ssx
    intercept = float(ys.mean() - slope * xs.mean())
    return slope, intercept


def multiple_correlation(
    matrix: PatternUtilityMatrix,
    predictors: Sequence[ColumnRef],
    target: ColumnRef,
) -> float:
    """Multiple correlation coefficient R in [0, 1]: the square root of the
    coefficient of determination of the least-squares fit (with intercept)
    of the target column on the predictor columns.

    Undefined when rows <= predictors, the target has zero variance, or the
    predictors are rank deficient.  With one predictor, R equals the
    absolute Pearson correlation."""
    if not predictors:
        raise SpecError("multiple correlation needs at least one predictor column")
    X = np.column_stack([matrix.column(c) for c in predictors])
    y = matrix.column(target)
    n, p = X.shape
    if n < 2 or n <= p:
        raise EvaluationUndefined("multiple correlation needs more occurrences than predictors")
    dy = y - y.mean()
    ss_tot = float(dy @ dy)
    if ss_tot == 0.0:
        raise EvaluationUndefined("multiple correlation is undefined on a constant target")
    design = np.column_stack([np.ones(n), X])
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < p + 1:
        raise EvaluationUndefined("multiple correlation is undefined on rank-deficient predictors")
    residuals = y - design @ beta
    r_squared = 1.0 - float(residuals @ residuals) / ss_tot
    return float(np.clip(math.sqrt(max(r_squared, 0.0)), 0.0, 1.0))


def _split_top(text: str, sep: str) -> list[str]:
    """Split on `sep` at parenthesis depth zero."""
    parts = []
    depth = 0
    current: list[str] = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(depth - 1, 0)
        if ch == sep and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    parts.append("".join(current).strip())
    return parts


def _parse_call(text: str) -> tuple[str, str | None]:
    text = text.strip()
    if "(" not in text:
        return text, None
    if not text.endswith(")"):
        raise SpecError(f"unbalanced parentheses in {text!r}")
    name, inner = text[:-1].split("(", 1)
    return name.strip(), inner.strip()


def _parse_columns(inner: str | None, context: str) -> tuple[ColumnRef, ...]:
    if not inner:
        raise SpecError(f"{context} needs at least one column")
    return tuple(ColumnRef.parse(tok) for tok in _split_top(inner, ","))


_ROW_VALUE_FNS = ("filter", "sum", "times", "max", "min", "avg")


def parse_utility_spec(text: str, intra: str = "sum") -> UtilitySpec:
    """Parse the textual utility form used on the command line.

    Grammar (whitespace around separators is ignored):

        hfirst:ROWFN[:AGG]      ROWFN = filter(COL) | sum(COLS) | times(COLS)
                                      | max(COLS) | min(COLS) | avg(COLS)
                                      | coherent(COLS[;POL]) | disagree(COND,COND)
                                AGG   = sum|times|max|min|avg|pct
                                (AGG defaults to pct for coherent/disagree,
                                 and is required otherwise)
        vfirst:CAGG(COLS):AGG   CAGG  = sum|times|max|min|avg|std|sstd|fracpos|fracneg
                                AGG   = sum|times|max|min|avg
        vfirst:mixedcoherence(COL,COL[;POL,POL])
        mixed:pearson(COL,COL)
        mixed:multicorr(COLS;COL)

        COL = (item|tx|obj|cont).INDEX   COND = COL(>|>=|<|<=|=|!=)NUMBER
        POL = pos|neg|either
    """
    parts = _split_top(text, ":")
    if len(parts) < 2:
        raise SpecError(f"expected CLASS:FUNCTION..., got {text!r}")
    head = parts[0].lower()

    if head == "hfirst":
        if len(parts) > 3:
            raise SpecError(f"too many ':' segments in {text!r}")
        name, inner = _parse_call(parts[1])
        if name == "disagree":
            if not inner:
                raise SpecError("disagree takes two conditions")
            conditions = tuple(Condition.parse(tok) for tok in _split_top(inner, ","))
            if len(conditions) != 2:
                raise SpecError("disagree takes exactly two conditions")
            row_fn = RowFn("disagree", conditions=conditions)
            agg = parts[2] if len(parts) == 3 else "pct"
        elif name == "coherent":
            if not inner:
                raise SpecError("coherent needs at least one column")
            sections = _split_top(inner, ";")
            columns = _parse_columns(sections[0], "coherent")
            polarity = sections[1] if len(sections) > 1 and sections[1] else "either"
            row_fn = RowFn("coherent", columns, polarity=polarity)
            agg = parts[2] if len(parts) == 3 else "pct"
        elif name in _ROW_VALUE_FNS:
            row_fn = RowFn(name, _parse_columns(inner, name))
            if len(parts) != 3:
                raise SpecError(f"hfirst:{name}(...) needs an aggregator, e.g. ':sum'")
            agg = parts[2]
        else:
            raise SpecError(f"unknown row function {name!r}")
        return HorizontalFirst(row_fn, agg, intra=intra)

    if head == "vfirst":
        name, inner = _parse_call(parts[1])
        if name == "mixedcoherence":
            if len(parts) != 2:
                raise SpecError("mixedcoherence takes no trailing aggregator")
            if not inner:
                raise SpecError("mixedcoherence takes two columns")
            sections = _split_top(inner, ";")
            columns = _parse_columns(sections[0], "mixedcoherence")
            if len(columns) != 2:
                raise SpecError("mixedcoherence takes exactly two columns")
            polarities = ("pos", "pos")
            if len(sections) > 1 and sections[1]:
                tokens = [tok.strip() for tok in _split_top(sections[1], ",")]
                if len(tokens) != 2:
                    raise SpecError("mixedcoherence takes two polarities")
                polarities = (tokens[0], tokens[1])
            return MixedCoherence(columns[0], columns[1], polarities[0], polarities[1], intra=intra)
        if name not in _COLUMN_AGGS:
            raise SpecError(f"unknown column aggregator {name!r}")
        if len(parts) != 3:
            raise SpecError(f"vfirst:{name}(...) needs an aggregator, e.g. ':sum'")
        return VerticalFirst(name, _parse_columns(inner, name), parts[2], intra=intra)

    if head == "mixed":
        if len(parts) != 2:
            raise SpecError(f"too many ':' segments in {text!r}")
        name, inner = _parse_call(parts[1])
        if name == "pearson":
            columns = _parse_columns(inner, "pearson")
            if len(columns) != 2:
                raise SpecError("pearson takes exactly two columns")
            return PearsonSpec(columns[0], columns[1], intra=intra)
        if name == "multicorr":
            if not inner:
                raise SpecError("multicorr takes predictor columns and a target column")
            sections = _split_top(inner, ";")
            if len(sections) != 2:
                raise SpecError("multicorr syntax is multicorr(PREDICTORS;TARGET)")
            predictors = _parse_columns(sections[0], "multicorr")
            targets = _parse_columns(sections[1], "multicorr target")
            if len(targets) != 1:
                raise SpecError("multicorr takes exactly one target column")
            return MultipleCorrelationSpec(predictors, targets[0], intra=intra)
        raise SpecError(f"unknown matrix function {name!r}")

    raise SpecError(f"unknown utility class {head!r} (expected hfirst, vfirst, or mixed)")
