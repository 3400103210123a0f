"""Pattern enumeration under frequency, utility, and mask constraints.

Candidates are generated depth first over the useful items.  Itemset mode
extends sets in canonical item order with vertical transaction-list
intersection; sequence mode appends items (suffix extension) and tracks
subsequence embeddings per supporting transaction.  Both prune on the
occurrence threshold and the size cap, which are anti-monotone.  Utility is
never assumed anti-monotone and is only checked when a candidate is emitted.
"""

from __future__ import annotations

from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence, Union

from .errors import EvaluationUndefined, SpecError
from .masks import Mask, check_mask, size_cap
from .model import Dataset, ItemId, Transaction, TransactionId
from .utility import ColumnRef, Condition, Level, UtilitySpec, pattern_utility_matrix, value_at


class PatternMode(str, Enum):
    ITEMSET = "itemset"
    SEQUENCE = "sequence"


@dataclass(frozen=True)
class Pattern:
    """An unordered item set (itemset mode, canonical sorted order) or an
    ordered item list (sequence mode, repeats permitted)."""

    items: tuple[ItemId, ...]
    mode: PatternMode = PatternMode.ITEMSET

    def __post_init__(self):
        if not self.items:
            raise SpecError("a pattern needs at least one item")
        if self.mode is PatternMode.ITEMSET:
            if len(set(self.items)) != len(self.items):
                raise SpecError("itemset patterns may not repeat items")
            object.__setattr__(self, "items", tuple(sorted(self.items)))

    @classmethod
    def itemset(cls, *items: ItemId) -> "Pattern":
        return cls(tuple(items), PatternMode.ITEMSET)

    @classmethod
    def sequence(cls, *items: ItemId) -> "Pattern":
        return cls(tuple(items), PatternMode.SEQUENCE)

    @property
    def size(self) -> int:
        return len(self.items)

    def __str__(self) -> str:
        if self.mode is PatternMode.SEQUENCE:
            return "<" + ",".join(self.items) + ">"
        return "{" + ",".join(self.items) + "}"


@dataclass(frozen=True)
class AllItems:
    """Keep every item."""


@dataclass(frozen=True)
class NonzeroFacet:
    """Keep items whose own facet is nonzero (item level), or that occur in
    at least one transaction whose resolved facet is nonzero."""

    column: ColumnRef


@dataclass(frozen=True)
class FacetDisagreement:
    """Keep items occurring in at least one transaction where both facet
    conditions hold, e.g. a positive sentiment with a reject decision."""

    first: Condition
    second: Condition

    def __post_init__(self):
        for cond in (self.first, self.second):
            if cond.column.level is Level.ITEM:
                raise SpecError("disagreement filter conditions must use tx/obj/cont facets")


@dataclass(frozen=True)
class CustomFilter:
    """Keep items accepted by an arbitrary predicate over the dataset."""

    predicate: Callable[[Dataset, ItemId], bool]


ItemFilter = Union[AllItems, NonzeroFacet, FacetDisagreement, CustomFilter]


def parse_item_filter(text: str) -> ItemFilter:
    """Parse the textual filter forms: `all`, `nonzero:tx.2`, and
    `disagree:tx.2>0,cont.0=0`."""
    stripped = text.strip()
    if stripped == "all":
        return AllItems()
    kind, sep, rest = stripped.partition(":")
    if not sep:
        raise SpecError(f"expected all, nonzero:COL, or disagree:COND,COND; got {text!r}")
    kind = kind.strip().lower()
    if kind == "nonzero":
        return NonzeroFacet(ColumnRef.parse(rest))
    if kind == "disagree":
        tokens = rest.split(",")
        if len(tokens) != 2:
            raise SpecError(f"disagree filter takes exactly two conditions, got {text!r}")
        return FacetDisagreement(Condition.parse(tokens[0]), Condition.parse(tokens[1]))
    raise SpecError(f"unknown item filter {kind!r}")


def item_filter_to_text(spec: ItemFilter) -> str:
    if isinstance(spec, AllItems):
        return "all"
    if isinstance(spec, NonzeroFacet):
        return f"nonzero:{spec.column}"
    if isinstance(spec, FacetDisagreement):
        return f"disagree:{spec.first},{spec.second}"
    return "custom"


def useful_items(dataset: Dataset, spec: ItemFilter = AllItems()) -> tuple[ItemId, ...]:
    """The pre-filtered item universe, sorted.  Items failing the filter are
    excluded from all candidate patterns."""
    universe = dataset.items
    if isinstance(spec, AllItems):
        return universe
    if isinstance(spec, NonzeroFacet):
        column = spec.column
        if column.level is Level.ITEM:
            kept = []
            for item in universe:
                vector = dataset.item_vectors.get(item, ())
                if column.facet >= len(vector):
                    raise SpecError(f"facet index out of range: {column} (level has {len(vector)} facets)")
                if vector[column.facet] != 0:
                    kept.append(item)
            return tuple(kept)
        qualifying: set[ItemId] = set()
        for transaction in dataset.transactions:
            if value_at(dataset, transaction, column) != 0:
                qualifying |= transaction.item_set
        return tuple(item for item in universe if item in qualifying)
    if isinstance(spec, FacetDisagreement):
        qualifying = set()
        for transaction in dataset.transactions:
            if spec.first.holds(value_at(dataset, transaction, spec.first.column)) and spec.second.holds(
                value_at(dataset, transaction, spec.second.column)
            ):
                qualifying |= transaction.item_set
        return tuple(item for item in universe if item in qualifying)
    if isinstance(spec, CustomFilter):
        return tuple(item for item in universe if spec.predicate(dataset, item))
    raise SpecError(f"unknown item filter {spec!r}")


def _is_subsequence(needle: Sequence[ItemId], haystack: Sequence[ItemId]) -> bool:
    pos = 0
    for item in haystack:
        if item == needle[pos]:
            pos += 1
            if pos == len(needle):
                return True
    return False


def _is_contiguous_run(needle: Sequence[ItemId], haystack: Sequence[ItemId]) -> bool:
    k = len(needle)
    for start in range(len(haystack) - k + 1):
        if tuple(haystack[start : start + k]) == tuple(needle):
            return True
    return False


def supports(transaction: Transaction, pattern: Pattern, contiguous: bool = False) -> bool:
    """Whether a transaction supports the pattern.

    Itemset mode: every pattern item occurs in the transaction.  Sequence
    mode: the pattern appears as an order-preserving subsequence of the
    transaction's position-sorted items; with `contiguous` the occurrences
    must additionally be adjacent."""
    if pattern.mode is PatternMode.ITEMSET:
        return set(pattern.items) <= transaction.item_set
    items = transaction.items()
    if contiguous:
        return _is_contiguous_run(pattern.items, items)
    return _is_subsequence(pattern.items, items)


def support_set(
    dataset: Dataset, pattern: Pattern, contiguous: bool = False
) -> tuple[tuple[TransactionId, ...], int]:
    """Supporting transaction ids (in dataset order) and their count.  A
    transaction counts at most once however many embeddings it contains."""
    tids = tuple(t.id for t in dataset.transactions if supports(t, pattern, contiguous))
    return tids, len(tids)


@dataclass(frozen=True)
class MiningConfig:
    """All knobs of one mining run.  `min_occurrences` is the occurrence
    threshold, `min_utility` the utility threshold (candidates must exceed
    it strictly)."""

    utility: UtilitySpec
    min_occurrences: int = 1
    min_utility: float = 0.0
    min_size: int = 1
    max_size: int = 3
    mode: PatternMode = PatternMode.ITEMSET
    contiguous: bool = False
    item_filter: ItemFilter = AllItems()
    masks: tuple[Mask, ...] = ()

    def __post_init__(self):
        if self.min_occurrences < 1:
            raise SpecError("occurrence threshold must be >= 1")
        if not 1 <= self.min_size <= self.max_size:
            raise SpecError(f"need 1 <= min_size <= max_size, got {self.min_size}..{self.max_size}")


@dataclass(frozen=True)
class MinedPattern:
    pattern: Pattern
    support: int
    transactions: tuple[TransactionId, ...]
    utility: float


@dataclass(frozen=True)
class MiningResult:
    """Valid patterns in canonical order plus diagnostics: how many
    candidates had their utility evaluated and how many were dropped because
    the utility function was undefined on their matrix."""

    patterns: tuple[MinedPattern, ...]
    undefined_utility: int = 0
    candidates_checked: int = 0


class _Collector:
    """Per-branch accumulator; merged after parallel subtree exploration."""

    __slots__ = ("dataset", "config", "found", "undefined", "checked")

    def __init__(self, dataset: Dataset, config: MiningConfig):
        self.dataset = dataset
        self.config = config
        self.found: list[MinedPattern] = []
        self.undefined = 0
        self.checked = 0

    def consider(self, items: tuple[ItemId, ...], transaction_indices: Iterable[int]) -> None:
        config = self.config
        if len(items) < config.min_size:
            return
        pattern = Pattern(items, config.mode)
        for mask in config.masks:
            if not check_mask(pattern, self.dataset, mask):
                return
        indices = sorted(transaction_indices)
        tids = tuple(self.dataset.transactions[i].id for i in indices)
        self.checked += 1
        try:
            matrix = pattern_utility_matrix(self.dataset, pattern.items, tids, config.utility.intra)
            utility = config.utility.evaluate(matrix)
        except EvaluationUndefined:
            self.undefined += 1
            return
        if utility > config.min_utility:
            self.found.append(MinedPattern(pattern, len(tids), tids, float(utility)))


def _itemset_descend(
    items: tuple[ItemId, ...],
    tid_sets: dict[ItemId, frozenset[int]],
    prefix: tuple[ItemId, ...],
    prefix_tids: frozenset[int],
    start: int,
    threshold: int,
    cap: int,
    collector: _Collector,
) -> None:
    for k in range(start, len(items)):
        item = items[k]
        tids = prefix_tids & tid_sets[item] if prefix else tid_sets[item]
        if len(tids) < threshold:
            continue
        extended = prefix + (item,)
        collector.consider(extended, tids)
        if len(extended) < cap:
            _itemset_descend(items, tid_sets, extended, tids, k + 1, threshold, cap, collector)


def _sequence_descend(
    items: tuple[ItemId, ...],
    positions: list[dict[ItemId, list[int]]],
    sequences: list[tuple[ItemId, ...]],
    prefix: tuple[ItemId, ...],
    state: list[tuple[int, tuple[int, ...]]],
    threshold: int,
    cap: int,
    contiguous: bool,
    collector: _Collector,
) -> None:
    """`state` holds, per supporting transaction, the embedding frontier:
    in gapped mode a single next-search index (earliest embedding), in
    contiguous mode every index where a run of the prefix ends, plus one."""
    collector.consider(prefix, (ti for ti, _ in state))
    if len(prefix) >= cap:
        return
    for item in items:
        extended_state: list[tuple[int, tuple[int, ...]]] = []
        for ti, frontier in state:
            if contiguous:
                sequence = sequences[ti]
                ends = tuple(j + 1 for j in frontier if j < len(sequence) and sequence[j] == item)
                if ends:
                    extended_state.append((ti, ends))
            else:
                occ = positions[ti].get(item)
                if occ:
                    j = bisect_left(occ, frontier[0])
                    if j < len(occ):
                        extended_state.append((ti, (occ[j] + 1,)))
        if len(extended_state) >= threshold:
            _sequence_descend(
                items, positions, sequences, prefix + (item,), extended_state,
                threshold, cap, contiguous, collector,
            )


def _effective_cap(config: MiningConfig) -> int:
    cap = config.max_size
    for mask in config.masks:
        bound = size_cap(mask)
        if bound is not None:
            cap = min(cap, bound)
    return cap


def mine(dataset: Dataset, config: MiningConfig, threads: int = 1) -> MiningResult:
    """Enumerate every pattern that satisfies the configuration: size within
    range, support at least the occurrence threshold, all masks passing, and
    utility strictly above the utility threshold.

    Independent root subtrees may be explored in parallel; the result is
    identical for every thread count."""
    items = useful_items(dataset, config.item_filter)
    cap = _effective_cap(config)

    roots: list[Callable[[_Collector], None]] = []
    if config.mode is PatternMode.ITEMSET:
        tid_sets: dict[ItemId, frozenset[int]] = {}
        for item in items:
            tid_sets[item] = frozenset(
                i for i, t in enumerate(dataset.transactions) if item in t.item_set
            )

        def _itemset_root(k: int) -> Callable[[_Collector], None]:
            def run(collector: _Collector) -> None:
                item = items[k]
                tids = tid_sets[item]
                if len(tids) < config.min_occurrences:
                    return
                collector.consider((item,), tids)
                if cap > 1:
                    _itemset_descend(
                        items, tid_sets, (item,), tids, k + 1,
                        config.min_occurrences, cap, collector,
                    )
            return run

        roots = [_itemset_root(k) for k in range(len(items))]
    else:
        sequences = [t.items() for t in dataset.transactions]
        positions: list[dict[ItemId, list[int]]] = []
        for sequence in sequences:
            index: dict[ItemId, list[int]] = {}
            for j, item in enumerate(sequence):
                index.setdefault(item, []).append(j)
            positions.append(index)

        def _sequence_root(item: ItemId) -> Callable[[_Collector], None]:
            def run(collector: _Collector) -> None:
                state: list[tuple[int, tuple[int, ...]]] = []
                for ti in range(len(sequences)):
                    occ = positions[ti].get(item)
                    if occ:
                        if config.contiguous:
                            state.append((ti, tuple(j + 1 for j in occ)))
                        else:
                            state.append((ti, (occ[0] + 1,)))
                if len(state) < config.min_occurrences:
                    return
                _sequence_descend(
                    items, positions, sequences, (item,), state,
                    config.min_occurrences, cap, config.contiguous, collector,
                )
            return run

        roots = [_sequence_root(item) for item in items]

    def _run_root(root: Callable[[_Collector], None]) -> _Collector:
        collector = _Collector(dataset, config)
        root(collector)
        return collector

    if threads > 1 and len(roots) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            collectors = list(pool.map(_run_root, roots))
    else:
        collectors = [_run_root(root) for root in roots]

    found: list[MinedPattern] = []
    undefined = 0
    checked = 0
    for collector in collectors:
        found.extend(collector.found)
        undefined += collector.undefined
        checked += collector.checked
    found.sort(key=lambda entry: (entry.pattern.size, entry.pattern.items))
    return MiningResult(tuple(found), undefined, checked)


def frequent_itemsets(
    dataset: Dataset,
    min_occurrences: int = 1,
    max_size: int = 3,
    items: Sequence[ItemId] | None = None,
) -> tuple[tuple[Pattern, tuple[TransactionId, ...]], ...]:
    """All itemsets with support at least `min_occurrences` and size at most
    `max_size`, with their supporting transaction ids, in canonical order.
    This is the frequency-only front half of mine(), used by the prediction
    pipeline."""
    if min_occurrences < 1:
        raise SpecError("occurrence threshold must be >= 1")
    universe = tuple(sorted(items)) if items is not None else dataset.items
    tid_sets = {
        item: frozenset(i for i, t in enumerate(dataset.transactions) if item in t.item_set)
        for item in universe
    }
    found: list[tuple[Pattern, tuple[TransactionId, ...]]] = []

    def visit(prefix: tuple[ItemId, ...], tids: frozenset[int]) -> None:
        ordered = tuple(dataset.transactions[i].id for i in sorted(tids))
        found.append((Pattern(prefix, PatternMode.ITEMSET), ordered))

    def descend(prefix: tuple[ItemId, ...], prefix_tids: frozenset[int], start: int) -> None:
        for k in range(start, len(universe)):
            item = universe[k]
            tids = prefix_tids & tid_sets[item] if prefix else tid_sets[item]
            if len(tids) < min_occurrences:
                continue
            extended = prefix + (item,)
            visit(extended, tids)
            if len(extended) < max_size:
                descend(extended, tids, k + 1)

    descend((), frozenset(), 0)
    found.sort(key=lambda entry: (entry[0].size, entry[0].items))
    return tuple(found)
