import random

import pytest

from ehupm import ContainerRec, Dataset, FacetDims, ItemOccurrence, ObjectRec, Transaction
from ehupm import assemble_dataset, parse_facts

# A small review-corpus excerpt: two papers (containers) with three reviews
# (objects) and four sentences (transactions).  Containers carry a 0/1
# decision facet, objects a rating and a confidence facet, transactions
# eight sentiment facets; items (words) have no facets.
REVIEW_FACTS = """
container(c1). container(c2).
object(r1, c1). object(r2, c1). object(r3, c2).
transaction(s1, r1). transaction(s2, r2). transaction(s3, r3). transaction(s4, r3).

item(paper, s1, 1, 2). item(hard, s1, 2, 1). item(narrow, s1, 3, 1).
item(problem, s2, 1, 1). item(paper, s2, 2, 1). item(concern, s2, 3, 1).
item(reproducibility, s2, 4, 1).
item(paper, s3, 1, 1). item(readable, s3, 2, 1).
item(paper, s4, 1, 1). item(good, s4, 2, 1). item(experiment, s4, 3, 1).
item(reproducibility, s4, 4, 1).

transactionUtilityVector(s1, -1, -1, 0, 1, 0, 0, 0, -1).
transactionUtilityVector(s2, 1, 0, 1, 0, -1, -1, 0, 0).
transactionUtilityVector(s3, 1, 1, 1, 0, 0, 0, 0, 1).
transactionUtilityVector(s4, 0, 1, -1, 1, 1, 0, 1, 1).

objectUtilityVector(r1, 2, 4).
objectUtilityVector(r2, 4, 3).
objectUtilityVector(r3, 9, 3).

containerUtilityVector(c1, 0).
containerUtilityVector(c2, 1).
"""


def dataset_from_facts(text: str) -> Dataset:
    return assemble_dataset(parse_facts(text))


@pytest.fixture(scope="session")
def review_dataset() -> Dataset:
    return dataset_from_facts(REVIEW_FACTS)


CATEGORIES = ("noun", "verb", "adj")


def random_dataset(
    rng: random.Random,
    max_items: int = 8,
    max_transactions: int = 12,
    max_facets: int = 3,
    dims: tuple[int, int, int, int] | None = None,
    with_categories: bool = False,
) -> Dataset:
    """A small random but structurally valid dataset.  Facet values are
    integers so arithmetic in tests stays exact."""
    n_items = rng.randint(2, max_items)
    universe = [f"i{chr(ord('a') + k)}" for k in range(n_items)]
    if dims is None:
        l = rng.randint(0, max_facets)
        m = rng.randint(0, max_facets)
        n = rng.randint(0, max_facets)
        o = rng.randint(0, max_facets)
        if l + m + n + o == 0:
            m = 1
    else:
        l, m, n, o = dims

    def vec(size: int) -> tuple[float, ...]:
        return tuple(float(rng.randint(-3, 5)) for _ in range(size))

    containers = {f"c{k}": ContainerRec(f"c{k}", vec(o)) for k in range(rng.randint(1, 3))}
    container_ids = list(containers)
    objects = {
        f"o{k}": ObjectRec(f"o{k}", rng.choice(container_ids), vec(n))
        for k in range(rng.randint(1, 4))
    }
    object_ids = list(objects)

    transactions = []
    for k in range(rng.randint(1, max_transactions)):
        length = rng.randint(1, min(6, n_items))
        if rng.random() < 0.3:
            chosen = rng.choices(universe, k=length)
        else:
            chosen = rng.sample(universe, length)
        occurrences = tuple(
            ItemOccurrence(item, pos + 1, float(rng.randint(1, 3)))
            for pos, item in enumerate(chosen)
        )
        transactions.append(Transaction(f"t{k}", rng.choice(object_ids), occurrences, vec(m)))

    categories = {}
    if with_categories:
        for item in universe:
            count = rng.randint(0, 2)
            categories[item] = frozenset(rng.sample(CATEGORIES, count))

    return Dataset(
        containers=containers,
        objects=objects,
        transactions=tuple(transactions),
        item_vectors={item: vec(l) for item in universe} if l else {},
        dims=FacetDims(l, m, n, o),
        item_categories=categories,
    )
