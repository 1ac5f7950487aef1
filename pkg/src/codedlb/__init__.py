"""Monte Carlo simulator for coded and uncoded content delivery on grid cache networks."""

__version__ = "0.1.0"

from codedlb.delivery import (
    UNDECODABLE,
    UNSERVABLE,
    DeliveryLedger,
    MessageRecord,
    RequestTrace,
    deliver_coded,
    deliver_nearest_replica,
    deliver_two_choice,
    deliver_uncoded_chunks,
    generate_trace,
)
from codedlb.fieldcode import (
    ChunkedFile,
    CodedChunk,
    PrimeField,
    RankBasis,
    RankDeficientError,
    decode,
    encode_chunk,
    full_rank_probability,
    is_prime,
    rank,
    rank_many,
    split_file,
)
from codedlb.harness import (
    CSV_HEADER,
    STRATEGIES,
    WORKERS_ENV,
    ExperimentConfig,
    PointConfig,
    TrialResult,
    preset_configs,
    run_experiment,
    run_many,
    run_point,
    run_preset,
    run_trial,
)
from codedlb.metrics import AggregateSummary, MetricsReport, aggregate, compute_metrics
from codedlb.placement import (
    CacheState,
    IndexedChunk,
    InfeasibleError,
    WholeFile,
    ensure_coverage,
    place_coded,
    place_uncoded,
    place_uncoded_chunks,
)
from codedlb.popularity import (
    PopularityProfile,
    effective_chunk_prob,
    lambda_sum,
    make_profile,
    sample_file,
    sample_files,
)
from codedlb.topology import Topology
from codedlb.validation import run_validation

__all__ = [
    "AggregateSummary",
    "CSV_HEADER",
    "CacheState",
    "ChunkedFile",
    "CodedChunk",
    "DeliveryLedger",
    "ExperimentConfig",
    "IndexedChunk",
    "InfeasibleError",
    "MessageRecord",
    "MetricsReport",
    "PointConfig",
    "PopularityProfile",
    "PrimeField",
    "RankBasis",
    "RankDeficientError",
    "RequestTrace",
    "STRATEGIES",
    "Topology",
    "TrialResult",
    "UNDECODABLE",
    "UNSERVABLE",
    "WORKERS_ENV",
    "WholeFile",
    "__version__",
    "aggregate",
    "compute_metrics",
    "decode",
    "deliver_coded",
    "deliver_nearest_replica",
    "deliver_two_choice",
    "deliver_uncoded_chunks",
    "effective_chunk_prob",
    "encode_chunk",
    "ensure_coverage",
    "full_rank_probability",
    "generate_trace",
    "is_prime",
    "lambda_sum",
    "make_profile",
    "place_coded",
    "place_uncoded",
    "place_uncoded_chunks",
    "preset_configs",
    "rank",
    "rank_many",
    "run_experiment",
    "run_many",
    "run_point",
    "run_preset",
    "run_trial",
    "run_validation",
    "sample_file",
    "sample_files",
    "split_file",
]
