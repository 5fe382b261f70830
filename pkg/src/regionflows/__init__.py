"""Citation-based accounting of knowledge flows between regions.

Pipeline: load a publication corpus (`corpus`), attribute each publication to
its region(s) of production (`attribution`), expand citation edges into
benefits and gains (`flows`), derive per-region and bilateral balances
(`balance`), and compute outflow/inflow specialization indexes
(`specialization`). `synth` generates reproducible synthetic corpora with a
brute-force oracle for end-to-end verification.
"""

from .attribution import (
    DUAL,
    EXCLUDED,
    FOREIGN_MAJORITY,
    NO_MAJORITY_REGION,
    SINGLE,
    UNLINKED_AUTHORS,
    MadeIn,
    RegionShares,
    attribute_corpus,
    classify_made_in,
    compute_shares,
)
from .balance import (
    BalanceEntry,
    MaxFlowEdge,
    PairwiseEntry,
    aggregate_by_area,
    balance_by_sc,
    max_flow_edges,
    overall_balance,
    pairwise_balance,
    sc_summed_balance,
    spearman,
)
from .corpus import (
    FOREIGN,
    UNRESOLVED,
    Address,
    Author,
    CitationEdge,
    Corpus,
    CorpusFormatError,
    Gazetteer,
    Publication,
    SubjectMap,
    load_corpus,
    resolve_region,
    validate_corpus,
)
from .flows import (
    FlowMatrix,
    Gain,
    RegionSummaryRow,
    benefits,
    citing_regions,
    compute_gains,
    flow_matrix,
    matrices_by_sc,
    region_summary,
    row_percentages,
)
from .specialization import (
    EARNED,
    EXCLUDE_FOCAL,
    GENERATED,
    INCLUDE_FOCAL,
    GainTensor,
    balassa_ratio,
    build_tensors,
    field_extremes,
    index_table,
    specialization_index,
    top_specializations,
)
from .synth import GeneratorConfig, GroundTruth, brute_force_gains, generate_corpus

__version__ = "0.1.0"

__all__ = [
    "Address",
    "Author",
    "BalanceEntry",
    "CitationEdge",
    "Corpus",
    "CorpusFormatError",
    "DUAL",
    "EARNED",
    "EXCLUDED",
    "EXCLUDE_FOCAL",
    "FOREIGN",
    "FOREIGN_MAJORITY",
    "FlowMatrix",
    "Gain",
    "GainTensor",
    "Gazetteer",
    "GENERATED",
    "GeneratorConfig",
    "GroundTruth",
    "INCLUDE_FOCAL",
    "MadeIn",
    "MaxFlowEdge",
    "NO_MAJORITY_REGION",
    "PairwiseEntry",
    "Publication",
    "RegionShares",
    "RegionSummaryRow",
    "SINGLE",
    "SubjectMap",
    "UNLINKED_AUTHORS",
    "UNRESOLVED",
    "aggregate_by_area",
    "attribute_corpus",
    "balance_by_sc",
    "balassa_ratio",
    "benefits",
    "brute_force_gains",
    "build_tensors",
    "citing_regions",
    "classify_made_in",
    "compute_gains",
    "compute_shares",
    "field_extremes",
    "flow_matrix",
    "generate_corpus",
    "index_table",
    "load_corpus",
    "matrices_by_sc",
    "max_flow_edges",
    "overall_balance",
    "pairwise_balance",
    "region_summary",
    "resolve_region",
    "row_percentages",
    "sc_summed_balance",
    "spearman",
    "specialization_index",
    "top_specializations",
    "validate_corpus",
]
