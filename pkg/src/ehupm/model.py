"""In-memory model of the layered transaction database.

The hierarchy has four levels: containers hold objects, objects hold
transactions, transactions hold item occurrences.  Every level may carry a
facet utility vector; all vectors of one level share the same length.  A
Dataset is immutable after assembly and safe to share across threads.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

from .errors import DatasetError
from .facts import Fact, FactSet, Quoted, Term

ItemId = str
TransactionId = str
ObjectId = str
ContainerId = str
FacetVector = tuple[float, ...]


class FacetDims(NamedTuple):
    """Facet counts per level: (item, transaction, object, container)."""

    item: int
    transaction: int
    object: int
    container: int


@dataclass(frozen=True)
class ItemOccurrence:
    """One occurrence of an item in a transaction.

    `position` is the 1-based ordinal within the transaction; `quantity` is
    the per-occurrence internal utility (defaults to 1 for item/2 input)."""

    item: ItemId
    position: int
    quantity: float = 1.0


@dataclass(frozen=True)
class Transaction:
    id: TransactionId
    object: ObjectId
    occurrences: tuple[ItemOccurrence, ...]  # sorted by position
    facets: FacetVector = ()

    def items(self) -> tuple[ItemId, ...]:
        """Items in position order (repeats possible)."""
        return tuple(occ.item for occ in self.occurrences)

    @cached_property
    def item_set(self) -> frozenset[ItemId]:
        return frozenset(occ.item for occ in self.occurrences)

    def quantity(self, item: ItemId) -> float:
        """Internal utility q(item, transaction): the quantity of the first
        occurrence by position.  Data with meaningful quantities is expected
        to hold one occurrence per item (no aggregation is performed)."""
        for occ in self.occurrences:
            if occ.item == item:
                return occ.quantity
        raise DatasetError(f"item {item!r} does not occur in transaction {self.id!r}")


@dataclass(frozen=True)
class ObjectRec:
    id: ObjectId
    container: ContainerId
    facets: FacetVector = ()


@dataclass(frozen=True)
class ContainerRec:
    id: ContainerId
    facets: FacetVector = ()


@dataclass(frozen=True)
class Dataset:
    """The assembled, validated four-level database.

    Referential integrity holds by construction: every transaction's object
    and every object's container exist, and all facet vectors match `dims`.
    """

    containers: dict[ContainerId, ContainerRec]
    objects: dict[ObjectId, ObjectRec]
    transactions: tuple[Transaction, ...]
    item_vectors: dict[ItemId, FacetVector]
    dims: FacetDims
    item_categories: dict[ItemId, frozenset[str]] = field(default_factory=dict)
    facet_labels: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @cached_property
    def items(self) -> tuple[ItemId, ...]:
        """The item universe: every item occurring somewhere, sorted."""
        universe = {occ.item for t in self.transactions for occ in t.occurrences}
        return tuple(sorted(universe))

    @cached_property
    def transaction_index(self) -> dict[TransactionId, int]:
        return {t.id: i for i, t in enumerate(self.transactions)}

    def transaction(self, tid: TransactionId) -> Transaction:
        try:
            return self.transactions[self.transaction_index[tid]]
        except KeyError:
            raise DatasetError(f"unknown transaction {tid!r}") from None

    def object_of(self, transaction: Transaction) -> ObjectRec:
        return self.objects[transaction.object]

    def container_of(self, transaction: Transaction) -> ContainerRec:
        return self.containers[self.objects[transaction.object].container]

    def restrict_to_objects(self, object_ids: Iterable[ObjectId]) -> "Dataset":
        """A sub-dataset containing only the given objects, their containers
        and their transactions.  Used for object-level cross-validation."""
        wanted = set(object_ids)
        unknown = wanted - self.objects.keys()
        if unknown:
            raise DatasetError(f"unknown objects: {sorted(unknown)}")
        objects = {oid: rec for oid, rec in self.objects.items() if oid in wanted}
        used_containers = {rec.container for rec in objects.values()}
        containers = {cid: rec for cid, rec in self.containers.items() if cid in used_containers}
        transactions = tuple(t for t in self.transactions if t.object in wanted)
        if not transactions:
            raise DatasetError("restriction leaves no transactions")
        return Dataset(
            containers=containers,
            objects=objects,
            transactions=transactions,
            item_vectors=dict(self.item_vectors),
            dims=self.dims,
            item_categories=dict(self.item_categories),
            facet_labels=dict(self.facet_labels),
        )

    def stats(self) -> dict[str, int]:
        return {
            "containers": len(self.containers),
            "objects": len(self.objects),
            "transactions": len(self.transactions),
            "items": len(self.items),
        }


def facet_dims(dataset: Dataset) -> FacetDims:
    """The (l, m, n, o) facet counts of the dataset's four levels."""
    return dataset.dims


def _ident(term: Term, fact: Fact, role: str) -> str:
    if isinstance(term, str):
        return term
    if isinstance(term, Quoted):
        return sys.intern(term.value)
    if isinstance(term, int):
        return sys.intern(str(term))
    raise DatasetError(f"{role} must be an identifier, got {term!r} (line {fact.line})")


def _number(term: Term, fact: Fact, role: str) -> float:
    if isinstance(term, (int, float)) and not isinstance(term, bool):
        return float(term)
    raise DatasetError(f"{role} must be a number, got {term!r} (line {fact.line})")


def _collect_vectors(facts: FactSet, predicate: str, role: str) -> tuple[int, dict[str, FacetVector]]:
    """Read one level's utility-vector facts; the facet count is inferred
    from the first fact and enforced on the rest."""
    dim: int | None = None
    vectors: dict[str, FacetVector] = {}
    for fact in facts.facts(predicate):
        if fact.arity < 2:
            raise DatasetError(
                f"{predicate} needs an identifier and at least one facet value (line {fact.line})"
            )
        key = _ident(fact.args[0], fact, f"{role} identifier")
        values = tuple(_number(a, fact, f"{role} facet value") for a in fact.args[1:])
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise DatasetError(
                f"inconsistent {predicate} arity: expected {dim} facet values, "
                f"got {len(values)} (line {fact.line})"
            )
        if key in vectors:
            raise DatasetError(f"duplicate {predicate} for {key!r} (line {fact.line})")
        vectors[key] = values
    return (dim or 0), vectors


def _collect_occurrences(facts: FactSet, transaction_ids: set[str]) -> dict[str, list[ItemOccurrence]]:
    item_facts = facts.facts("item")
    arities = {f.arity for f in item_facts}
    if not arities <= {2, 4}:
        bad = sorted(arities - {2, 4})
        raise DatasetError(f"item facts must have 2 or 4 arguments, found arity {bad[0]}")
    if arities == {2, 4}:
        raise DatasetError("item/2 and item/4 forms cannot be mixed in one input")

    per_transaction: dict[str, list[ItemOccurrence]] = {}
    if arities == {4}:
        for fact in item_facts:
            item = _ident(fact.args[0], fact, "item")
            tid = _ident(fact.args[1], fact, "transaction")
            if tid not in transaction_ids:
                raise DatasetError(f"item fact references unknown transaction {tid!r} (line {fact.line})")
            position = fact.args[2]
            if not isinstance(position, int) or position < 1:
                raise DatasetError(f"item position must be an integer >= 1 (line {fact.line})")
            quantity = _number(fact.args[3], fact, "item quantity")
            per_transaction.setdefault(tid, []).append(ItemOccurrence(item, position, quantity))
    elif arities == {2}:
        for fact in item_facts:
            tid = _ident(fact.args[0], fact, "transaction")
            item = _ident(fact.args[1], fact, "item")
            if tid not in transaction_ids:
                raise DatasetError(f"item fact references unknown transaction {tid!r} (line {fact.line})")
            occs = per_transaction.setdefault(tid, [])
            occs.append(ItemOccurrence(item, len(occs) + 1, 1.0))

    for tid, occs in per_transaction.items():
        occs.sort(key=lambda occ: occ.position)
        positions = [occ.position for occ in occs]
        if len(set(positions)) != len(positions):
            raise DatasetError(f"duplicate item positions in transaction {tid!r}")
    return per_transaction


def assemble_dataset(facts: FactSet) -> Dataset:
    """Build and validate a Dataset from parsed facts.

    Facet dimensions are inferred from the first vector fact of each level;
    a level with no vector facts has dimension 0.  Raises DatasetError on
    dangling references, inconsistent vector arity, duplicate identifiers,
    or missing vectors at a level whose dimension is positive.
    """
    container_ids: list[str] = []
    seen: set[str] = set()
    for fact in facts.facts("container"):
        if fact.arity != 1:
            raise DatasetError(f"container expects 1 argument (line {fact.line})")
        cid = _ident(fact.args[0], fact, "container")
        if cid in seen:
            raise DatasetError(f"duplicate container {cid!r} (line {fact.line})")
        seen.add(cid)
        container_ids.append(cid)

    object_rows: list[tuple[str, str]] = []
    seen = set()
    for fact in facts.facts("object"):
        if fact.arity != 2:
            raise DatasetError(f"object expects 2 arguments (line {fact.line})")
        oid = _ident(fact.args[0], fact, "object")
        cid = _ident(fact.args[1], fact, "container")
        if oid in seen:
            raise DatasetError(f"duplicate object {oid!r} (line {fact.line})")
        seen.add(oid)
        if cid not in container_ids:
            raise DatasetError(f"object {oid!r} references unknown container {cid!r} (line {fact.line})")
        object_rows.append((oid, cid))

    transaction_rows: list[tuple[str, str]] = []
    seen = set()
    object_ids = {oid for oid, _ in object_rows}
    for fact in facts.facts("transaction"):
        if fact.arity != 2:
            raise DatasetError(f"transaction expects 2 arguments (line {fact.line})")
        tid = _ident(fact.args[0], fact, "transaction")
        oid = _ident(fact.args[1], fact, "object")
        if tid in seen:
            raise DatasetError(f"duplicate transaction {tid!r} (line {fact.line})")
        seen.add(tid)
        if oid not in object_ids:
            raise DatasetError(f"transaction {tid!r} references unknown object {oid!r} (line {fact.line})")
        transaction_rows.append((tid, oid))

    if not transaction_rows:
        raise DatasetError("dataset needs at least one transaction")

    transaction_ids = {tid for tid, _ in transaction_rows}
    occurrences = _collect_occurrences(facts, transaction_ids)

    l, item_vectors = _collect_vectors(facts, "itemUtilityVector", "item")
    m, tx_vectors = _collect_vectors(facts, "transactionUtilityVector", "transaction")
    n, obj_vectors = _collect_vectors(facts, "objectUtilityVector", "object")
    o, cont_vectors = _collect_vectors(facts, "containerUtilityVector", "container")

    universe = {occ.item for occs in occurrences.values() for occ in occs}
    for item in item_vectors:
        if item not in universe:
            raise DatasetError(f"itemUtilityVector references unknown item {item!r}")
    if l:
        missing = universe - item_vectors.keys()
        if missing:
            raise DatasetError(f"missing item utility vector for {sorted(missing)[0]!r}")

    def _level_vectors(vectors: dict[str, FacetVector], dim: int, ids: Iterable[str], what: str) -> None:
        id_set = set(ids)
        for key in vectors:
            if key not in id_set:
                raise DatasetError(f"{what}UtilityVector references unknown {what} {key!r}")
        if dim:
            for key in id_set:
                if key not in vectors:
                    raise DatasetError(f"missing {what} utility vector for {key!r}")

    _level_vectors(tx_vectors, m, transaction_ids, "transaction")
    _level_vectors(obj_vectors, n, object_ids, "object")
    _level_vectors(cont_vectors, o, set(container_ids), "container")

    categories: dict[str, frozenset[str]] = {}
    accum: dict[str, set[str]] = {}
    for fact in facts.facts("itemCategory"):
        if fact.arity != 2:
            raise DatasetError(f"itemCategory expects 2 arguments (line {fact.line})")
        item = _ident(fact.args[0], fact, "item")
        category = _ident(fact.args[1], fact, "category")
        accum.setdefault(item, set()).add(category)
    categories = {item: frozenset(cats) for item, cats in accum.items()}

    containers = {cid: ContainerRec(cid, cont_vectors.get(cid, ())) for cid in container_ids}
    objects = {oid: ObjectRec(oid, cid, obj_vectors.get(oid, ())) for oid, cid in object_rows}
    transactions = tuple(
        Transaction(tid, oid, tuple(occurrences.get(tid, ())), tx_vectors.get(tid, ()))
        for tid, oid in transaction_rows
    )

    return Dataset(
        containers=containers,
        objects=objects,
        transactions=transactions,
        item_vectors=item_vectors,
        dims=FacetDims(l, m, n, o),
        item_categories=categories,
    )
