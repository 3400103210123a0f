import itertools
import random

import numpy as np
import pytest

from ehupm import (
    ContainerRec,
    Dataset,
    FacetDims,
    ItemOccurrence,
    ObjectRec,
    Pattern,
    PatternPredictor,
    PredictorSet,
    SpecError,
    Transaction,
    build_predictors,
    classify,
    coverage_metrics,
    cross_validate,
    predict,
)

from conftest import random_dataset

TOL = 1e-9


def make_predictor(items, facet, support, correlation, slope, intercept):
    return PatternPredictor(Pattern.itemset(*items), facet, support, correlation, slope, intercept)


def make_transaction(items, facets, tid="t0", obj="o0"):
    occurrences = tuple(ItemOccurrence(item, k + 1, 1.0) for k, item in enumerate(items))
    return Transaction(tid, obj, occurrences, tuple(float(v) for v in facets))


def predictor_set(predictors):
    return PredictorSet(tuple(predictors), 1, 0.0, 0)


def linear_dataset(n_objects=20, tx_per_object=2):
    """Every transaction carries one shared item and a facet equal to its
    object's 0/1 target value: a perfectly predictable construction."""
    containers = {"c": ContainerRec("c", ())}
    objects = {}
    transactions = []
    for k in range(n_objects):
        target = float(k % 2)
        oid = f"p{k:02d}"
        objects[oid] = ObjectRec(oid, "c", (target,))
        for j in range(tx_per_object):
            transactions.append(
                Transaction(f"e{k:02d}_{j}", oid, (ItemOccurrence("marker", 1, 1.0),), (target,))
            )
    return Dataset(containers, objects, tuple(transactions), {}, FacetDims(0, 1, 1, 0))


# --- the ensemble formula -------------------------------------------------------

def test_single_predictor_weights_cancel():
    predictors = predictor_set([make_predictor(["a"], 0, 3, 0.8, 0.0, 0.6)])
    transaction = make_transaction(["a"], [2.0])
    assert abs(predict(predictors, transaction) - 0.6) < TOL


def test_two_predictor_hand_case():
    # (mu, gamma, nu) = (1.0, 0.5, 2) and (0.0, 1.0, 1):
    # (1.0*0.5*2 + 0.0*1.0*1) / (0.5*2 + 1.0*1) = 0.5
    predictors = predictor_set(
        [
            make_predictor(["a"], 0, 2, 0.5, 0.0, 1.0),
            make_predictor(["b"], 0, 1, 1.0, 0.0, 0.0),
        ]
    )
    transaction = make_transaction(["a", "b"], [0.0])
    assert predict(predictors, transaction) == 0.5


def test_no_matching_pattern_gives_no_prediction():
    predictors = predictor_set([make_predictor(["z"], 0, 2, 0.9, 1.0, 0.0)])
    transaction = make_transaction(["a"], [1.0])
    assert predict(predictors, transaction) is None


def test_predict_invariant_under_support_scaling():
    rng = random.Random(3)
    for _ in range(20):
        predictors = [
            make_predictor([name], 0, rng.randint(1, 5), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1))
            for name in ("a", "b", "c")
        ]
        transaction = make_transaction(["a", "b", "c"], [rng.uniform(-2, 2)])
        base = predict(predictor_set(predictors), transaction)
        scale = rng.randint(2, 5)
        scaled = [
            make_predictor(p.pattern.items, p.facet, p.support * scale, p.correlation, p.slope, p.intercept)
            for p in predictors
        ]
        rescaled = predict(predictor_set(scaled), transaction)
        if base is None:
            assert rescaled is None
        else:
            assert abs(rescaled - base) < TOL


def test_predict_bounded_by_matched_estimates():
    rng = random.Random(9)
    for _ in range(30):
        names = ["a", "b", "c", "d"]
        predictors = [
            make_predictor([name], 0, rng.randint(1, 4), rng.uniform(-1, 1), rng.uniform(-2, 2), rng.uniform(-1, 2))
            for name in rng.sample(names, rng.randint(1, 4))
        ]
        carried = rng.sample(names, rng.randint(0, 4))
        transaction = make_transaction(carried, [rng.uniform(-3, 3)])
        value = predict(predictor_set(predictors), transaction)
        matched = [
            p.estimate(transaction.facets[0])
            for p in predictors
            if set(p.pattern.items) <= transaction.item_set and p.weight > 0
        ]
        if not matched:
            assert value is None
        else:
            assert min(matched) - TOL <= value <= max(matched) + TOL
            assert 0.0 <= value <= 1.0


def test_classify_threshold():
    assert classify(0.49) == 0
    assert classify(0.5) == 1
    assert classify(1.0) == 1
    assert classify(0.0) == 0


def test_duplicate_pairs_rejected():
    predictor = make_predictor(["a"], 0, 2, 0.5, 1.0, 0.0)
    with pytest.raises(SpecError):
        PredictorSet((predictor, predictor), 1, 0.0, 0)


# --- building predictors --------------------------------------------------------

def test_build_predictors_perfect_linear():
    ds = linear_dataset()
    predictors = build_predictors(ds, min_occurrences=2, min_abs_correlation=0.9, max_size=1)
    assert len(predictors.predictors) == 1
    fitted = predictors.predictors[0]
    assert fitted.pattern.items == ("marker",)
    assert abs(fitted.correlation - 1.0) < TOL
    assert abs(fitted.slope - 1.0) < TOL and abs(fitted.intercept) < TOL
    assert fitted.estimate(0.0) == 0.0 and fitted.estimate(1.0) == 1.0


def brute_force_pairs(ds, object_facet, min_occ, max_size):
    """All (pattern items, facet, correlation) triples via direct scans and
    an independent correlation computation."""
    universe = sorted({occ.item for t in ds.transactions for occ in t.occurrences})
    triples = []
    for size in range(1, max_size + 1):
        for candidate in itertools.combinations(universe, size):
            supporting = [t for t in ds.transactions if set(candidate) <= t.item_set]
            if len(supporting) < min_occ:
                continue
            y = np.array([ds.objects[t.object].facets[object_facet] for t in supporting])
            for j in range(ds.dims.transaction):
                x = np.array([t.facets[j] for t in supporting])
                if len(x) < 2 or np.std(x) == 0 or np.std(y) == 0:
                    continue
                r = float(np.corrcoef(x, y)[0, 1])
                triples.append((candidate, j, r))
    return triples


def test_build_predictors_matches_brute_force_pearson():
    rng = random.Random(15)
    checked_any_nonempty = False
    for trial in range(10):
        ds = random_dataset(rng, dims=(0, 2, 1, 0))
        threshold = rng.choice([0.4, 0.6, 1.0])
        predictors = build_predictors(ds, min_occurrences=2, min_abs_correlation=threshold, max_size=2)
        got = {(p.pattern.items, p.facet) for p in predictors.predictors}
        for candidate, facet, r in brute_force_pairs(ds, 0, 2, 2):
            if abs(abs(r) - threshold) < 1e-9:
                continue  # numerically on the threshold: either verdict is fine
            assert ((candidate, facet) in got) == (abs(r) >= threshold), (trial, candidate, facet, r)
        if got:
            checked_any_nonempty = True
    assert checked_any_nonempty


def test_threshold_one_keeps_only_perfect_correlations():
    rng = random.Random(4)
    ds = random_dataset(rng, dims=(0, 3, 1, 0), max_transactions=12)
    predictors = build_predictors(ds, min_occurrences=3, min_abs_correlation=1.0, max_size=2)
    total_pairs = len(brute_force_pairs(ds, 0, 3, 2))
    assert len(predictors.predictors) <= max(total_pairs // 5, 1)
    for p in predictors.predictors:
        assert abs(abs(p.correlation) - 1.0) < TOL


# --- cross-validation -----------------------------------------------------------

def test_cross_validate_perfect_linear_data():
    report = cross_validate(linear_dataset(), folds=5, seed=0, min_occurrences=2, min_abs_correlation=0.9, max_size=1)
    assert report.mean_accuracy == 1.0
    assert report.missing_rate == 0.0
    assert report.accuracy_variance == 0.0
    assert all(not fold.flagged for fold in report.folds)


def test_cross_validation_matches_single_regression_oracle():
    # One shared item and one facet yield exactly one predictor per fold;
    # fold accuracy must equal that regression's own classification accuracy,
    # recomputed here with an independent fit.
    rng = random.Random(8)
    containers = {"c": ContainerRec("c", ())}
    objects = {}
    transactions = []
    for k in range(24):
        target = float(k % 2)
        oid = f"p{k:02d}"
        objects[oid] = ObjectRec(oid, "c", (target,))
        noisy = target if rng.random() > 0.1 else 1.0 - target
        transactions.append(
            Transaction(f"e{k:02d}", oid, (ItemOccurrence("m", 1, 1.0),), (noisy,))
        )
    ds = Dataset(containers, objects, tuple(transactions), {}, FacetDims(0, 1, 1, 0))

    folds, seed = 4, 11
    report = cross_validate(ds, folds=folds, seed=seed, min_occurrences=2, min_abs_correlation=0.05, max_size=1)

    shuffled = sorted(ds.objects)
    random.Random(seed).shuffle(shuffled)
    for fold_report, test_objects in zip(report.folds, (shuffled[i::folds] for i in range(folds))):
        train = [t for t in ds.transactions if t.object not in set(test_objects)]
        x = np.array([t.facets[0] for t in train])
        y = np.array([ds.objects[t.object].facets[0] for t in train])
        slope, intercept = np.polyfit(x, y, 1)
        exact = 0
        attempted = 0
        for t in ds.transactions:
            if t.object not in set(test_objects):
                continue
            attempted += 1
            estimate = min(max(slope * t.facets[0] + intercept, 0.0), 1.0)
            if float(classify(estimate)) == ds.objects[t.object].facets[0]:
                exact += 1
        assert fold_report.attempted == attempted
        assert fold_report.accuracy == pytest.approx(exact / attempted)


def test_missing_rate_monotone_in_correlation_threshold():
    rng = random.Random(6)
    for _ in range(5):
        ds = random_dataset(rng, dims=(0, 2, 1, 0), max_transactions=12)
        rates = []
        for threshold in (0.2, 0.5, 0.8, 1.01):
            report = cross_validate(
                ds, folds=3, seed=2, min_occurrences=2, min_abs_correlation=threshold, max_size=2
            )
            rates.append(report.missing_rate)
        assert rates == sorted(rates)
        assert rates[-1] == 1.0  # nothing exceeds an impossible threshold


def test_fold_with_no_predictions_is_flagged():
    ds = linear_dataset(n_objects=4, tx_per_object=1)
    report = cross_validate(ds, folds=4, seed=0, min_occurrences=50, min_abs_correlation=0.5, max_size=1)
    assert report.missing_rate == 1.0
    assert all(fold.flagged for fold in report.folds)
    assert report.mean_accuracy == 0.0


def test_cross_validate_validates_folds():
    with pytest.raises(SpecError):
        cross_validate(linear_dataset(), folds=1)


# --- coverage --------------------------------------------------------------------

def test_coverage_all_singletons(review_dataset):
    patterns = [Pattern.itemset(item) for item in review_dataset.items]
    metrics = coverage_metrics(review_dataset, patterns)
    assert metrics.transaction_coverage == 1.0
    assert metrics.combination_coverage == 1.0


def test_coverage_empty_pattern_set(review_dataset):
    metrics = coverage_metrics(review_dataset, [])
    assert metrics.transaction_coverage == 0.0
    assert metrics.combination_coverage == 0.0


def test_coverage_matches_brute_force():
    rng = random.Random(18)
    for _ in range(10):
        ds = random_dataset(rng)
        items = list(ds.items)
        patterns = [
            Pattern.itemset(*rng.sample(items, rng.randint(1, min(2, len(items)))))
            for _ in range(rng.randint(1, 4))
        ]
        metrics = coverage_metrics(ds, patterns)
        covered = sum(
            1 for t in ds.transactions if any(set(p.items) <= t.item_set for p in patterns)
        )
        combos = {t.item_set for t in ds.transactions}
        covered_combos = sum(1 for c in combos if any(set(p.items) <= c for p in patterns))
        assert metrics.transaction_coverage == covered / len(ds.transactions)
        assert metrics.combination_coverage == covered_combos / len(combos)


# --- persistence ------------------------------------------------------------------

def test_predictor_persistence_round_trip(tmp_path):
    predictors = build_predictors(linear_dataset(), min_occurrences=2, min_abs_correlation=0.9, max_size=1)
    path = tmp_path / "model.tsv"
    predictors.save(path)
    reloaded = PredictorSet.load(path)
    assert reloaded == predictors


def test_predictor_persistence_precision(tmp_path):
    original = PredictorSet(
        (make_predictor(["a", "b"], 3, 12, -0.7512345678912345, 0.1, 0.93),),
        10,
        0.5,
        0,
    )
    text = original.to_text()
    assert PredictorSet.from_text(text) == original


def test_persistence_rejects_unserializable_items():
    bad = PredictorSet((make_predictor(["a,b"], 0, 1, 0.5, 1.0, 0.0),), 1, 0.0, 0)
    with pytest.raises(SpecError):
        bad.to_text()
