"""Extended high-utility pattern mining over layered transaction databases.

The package loads datalog-style fact files into a four-level database
(containers, objects, transactions, item occurrences) with facet utility
vectors at every level, enumerates patterns under frequency, utility, and
mask constraints with a pluggable utility-function library, and includes a
pattern-based regression-ensemble prediction pipeline with cross-validation
and coverage metrics.
"""

from .errors import (
    DatasetError,
    EhupmError,
    EvaluationUndefined,
    FactSyntaxError,
    SpecError,
)
from .facts import Fact, FactSet, Quoted, expected_schema, parse_facts
from .masks import (
    CategoryCoverageMask,
    ConjunctionMask,
    Mask,
    SizeMask,
    check_mask,
    mask_to_text,
    parse_mask,
    size_cap,
)
from .miner import (
    AllItems,
    CustomFilter,
    FacetDisagreement,
    ItemFilter,
    MinedPattern,
    MiningConfig,
    MiningResult,
    NonzeroFacet,
    Pattern,
    PatternMode,
    frequent_itemsets,
    item_filter_to_text,
    mine,
    parse_item_filter,
    support_set,
    supports,
    useful_items,
)
from .model import (
    ContainerRec,
    Dataset,
    FacetDims,
    ItemOccurrence,
    ObjectRec,
    Transaction,
    assemble_dataset,
    facet_dims,
)
from .prediction import (
    CoverageMetrics,
    CVReport,
    FoldReport,
    PatternPredictor,
    PredictorSet,
    build_predictors,
    classify,
    coverage_metrics,
    cross_validate,
    predict,
)
from .utility import (
    ColumnRef,
    Condition,
    HorizontalFirst,
    Level,
    MixedCoherence,
    MultipleCorrelationSpec,
    OccurrenceUtilityVector,
    PatternUtilityMatrix,
    PearsonSpec,
    RowFn,
    UtilitySpec,
    VerticalFirst,
    coherence_degree,
    disagreement_degree,
    evaluate,
    filter_sum,
    filter_times,
    intra_pattern_utility,
    linear_fit,
    max_sum,
    mixed_coherence_degree,
    multiple_correlation,
    occurrence_utility_vector,
    parse_utility_spec,
    pattern_utility_matrix,
    pearson,
    pearson_xy,
    std_max,
    value_at,
)

__version__ = "0.1.0"
