import pytest

from ehupm import DatasetError, assemble_dataset, facet_dims, parse_facts

from conftest import REVIEW_FACTS, dataset_from_facts

MINIMAL = """
container(c). object(o, c). transaction(t, o).
item(a, t, 1, 1).
"""


def test_review_excerpt_shape(review_dataset):
    assert review_dataset.stats() == {
        "containers": 2,
        "objects": 3,
        "transactions": 4,
        "items": 9,
    }
    assert facet_dims(review_dataset) == (0, 8, 2, 1)


def test_facet_dims_classical_shape():
    ds = dataset_from_facts(MINIMAL + "itemUtilityVector(a, 5).")
    assert facet_dims(ds) == (1, 0, 0, 0)


def test_facet_dims_wide_transaction_level():
    # One patient-style object with a single facet and 42 per-visit facets.
    values = ",".join(str(k) for k in range(42))
    ds = dataset_from_facts(
        f"""
        container(c). object(p1, c).
        transaction(e1, p1). transaction(e2, p1).
        item(e1, gender_male). item(e2, gender_male).
        transactionUtilityVector(e1, {values}).
        transactionUtilityVector(e2, {values}).
        objectUtilityVector(p1, 1).
        """
    )
    assert facet_dims(ds) == (0, 42, 1, 0)


def test_missing_level_gives_zero_dimension():
    ds = dataset_from_facts(MINIMAL)
    assert facet_dims(ds) == (0, 0, 0, 0)


def test_inconsistent_vector_arity():
    text = MINIMAL + "transactionUtilityVector(t, 1, 2)."
    dataset_from_facts(text)  # consistent baseline parses
    bad = """
    container(c). object(o, c). transaction(t1, o). transaction(t2, o).
    item(a, t1, 1, 1). item(a, t2, 1, 1).
    transactionUtilityVector(t1, 1, 2).
    transactionUtilityVector(t2, 1).
    """
    with pytest.raises(DatasetError, match="inconsistent"):
        dataset_from_facts(bad)


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("container(c). object(o, missing). transaction(t, o). item(a, t, 1, 1).", "unknown container"),
        ("container(c). object(o, c). transaction(t, missing). item(a, t, 1, 1).", "unknown object"),
        (MINIMAL + "itemUtilityVector(ghost, 1).", "unknown item"),
        (MINIMAL + "transactionUtilityVector(ghost, 1).", "unknown transaction"),
        ("container(c). container(c). object(o, c). transaction(t, o). item(a, t, 1, 1).", "duplicate container"),
        (MINIMAL + "transactionUtilityVector(t, 1). transactionUtilityVector(t, 1).", "duplicate"),
        ("container(c). object(o, c). transaction(t, o). item(b, t, 1, 1). item(a, ghost, 1, 1).", "unknown transaction"),
    ],
)
def test_reference_and_duplicate_errors(text, fragment):
    with pytest.raises(DatasetError, match=fragment):
        dataset_from_facts(text)


def test_missing_item_vector_is_an_error():
    text = """
    container(c). object(o, c). transaction(t, o).
    item(a, t, 1, 1). item(b, t, 2, 1).
    itemUtilityVector(a, 5).
    """
    with pytest.raises(DatasetError, match="missing item utility vector"):
        dataset_from_facts(text)


def test_missing_transaction_vector_is_an_error():
    text = """
    container(c). object(o, c). transaction(t1, o). transaction(t2, o).
    item(a, t1, 1, 1). item(a, t2, 1, 1).
    transactionUtilityVector(t1, 1).
    """
    with pytest.raises(DatasetError, match="missing transaction utility vector"):
        dataset_from_facts(text)


def test_item_shorthand_assigns_positions_and_unit_quantity():
    ds = dataset_from_facts(
        """
        container(c). object(o, c). transaction(e1, o).
        item(e1, gender_male). item(e1, age_60).
        """
    )
    occurrences = ds.transaction("e1").occurrences
    assert [(o.item, o.position, o.quantity) for o in occurrences] == [
        ("gender_male", 1, 1.0),
        ("age_60", 2, 1.0),
    ]


def test_item_long_form_argument_order():
    ds = dataset_from_facts(MINIMAL.replace("item(a, t, 1, 1).", "item(a, t, 2, 3)."))
    occ = ds.transaction("t").occurrences[0]
    assert (occ.item, occ.position, occ.quantity) == ("a", 2, 3.0)


def test_mixed_item_forms_rejected():
    text = """
    container(c). object(o, c). transaction(t, o).
    item(a, t, 1, 1). item(t, b).
    """
    with pytest.raises(DatasetError, match="mixed"):
        dataset_from_facts(text)


def test_occurrences_sorted_by_position():
    ds = dataset_from_facts(
        """
        container(c). object(o, c). transaction(t, o).
        item(b, t, 2, 1). item(a, t, 1, 1).
        """
    )
    assert ds.transaction("t").items() == ("a", "b")


def test_duplicate_positions_rejected():
    text = """
    container(c). object(o, c). transaction(t, o).
    item(a, t, 1, 1). item(b, t, 1, 1).
    """
    with pytest.raises(DatasetError, match="duplicate item positions"):
        dataset_from_facts(text)


def test_duplicate_item_at_distinct_positions_allowed():
    ds = dataset_from_facts(
        """
        container(c). object(o, c). transaction(t, o).
        item(a, t, 1, 2). item(a, t, 3, 5).
        """
    )
    t = ds.transaction("t")
    assert t.items() == ("a", "a")
    assert t.quantity("a") == 2.0  # first occurrence by position


def test_at_least_one_transaction_required():
    with pytest.raises(DatasetError, match="at least one transaction"):
        dataset_from_facts("container(c). object(o, c).")


def test_empty_container_accepted():
    ds = dataset_from_facts(MINIMAL + "container(spare).")
    assert "spare" in ds.containers


def test_assembly_deterministic():
    first = dataset_from_facts(REVIEW_FACTS)
    second = dataset_from_facts(REVIEW_FACTS)
    assert first == second


def test_facet_values_stored_as_floats():
    ds = dataset_from_facts(MINIMAL + "transactionUtilityVector(t, 3).")
    value = ds.transaction("t").facets[0]
    assert isinstance(value, float) and value == 3.0


def test_categories_collected():
    ds = dataset_from_facts(MINIMAL + "itemCategory(a, noun). itemCategory(a, verb).")
    assert ds.item_categories["a"] == frozenset({"noun", "verb"})


def test_restrict_to_objects(review_dataset):
    sub = review_dataset.restrict_to_objects(["r3"])
    assert sub.stats()["transactions"] == 2
    assert set(sub.objects) == {"r3"}
    assert set(sub.containers) == {"c2"}
    assert sub.dims == review_dataset.dims
    with pytest.raises(DatasetError):
        review_dataset.restrict_to_objects(["nope"])


def test_numeric_identifiers_accepted():
    ds = dataset_from_facts(
        """
        container(1). object(10, 1). transaction(100, 10).
        item(a, 100, 1, 1).
        """
    )
    assert ds.transaction("100").object == "10"
