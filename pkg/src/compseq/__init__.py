"""Inference of run-collapsed state sequences for linear-chain Markov models.

The package decodes the sequence of distinct states in order of
appearance (duplicate neighbors collapsed), marginalizing over where the
run boundaries fall, in polynomial time; standard best-path and
per-step-marginal decoders are included as baselines, together with a
brute-force oracle, evaluation metrics, a grid-world data generator, and
a command-line front end.
"""

__version__ = "0.1.0"

from .compressed import (ConstraintSet, DecodeResult, LatticeTable,
                         LengthDistribution, compressed_decode,
                         compressed_marginal, compressed_sequence_log_lattice,
                         constraint_log_Z, length_distribution,
                         log_partition_via_table, table_forward)
from .datagen import (GridWorld, RobotTrace, default_world, load_world,
                      robot_dataset, sample_chain, simulate_robot,
                      trace_to_sequence)
from .metrics import EvaluationReport, edit_distance, eds, exact_score
from .model import (START, ChainModel, CompressedSequence, LabeledSequence,
                    ObservationAlphabet, StateSpace, compress, estimate_counts,
                    load_dataset, load_model, log_potential, save_dataset,
                    save_model, sequence_log_score)
from .oracle import (BudgetExceededError, OracleBudget, enumerate_posterior,
                     oracle_compressed_distribution, oracle_compressed_marginal,
                     oracle_length_distribution, oracle_log_partition)
from .vanilla import (ConstraintList, ForwardBackwardResult, baseline_compressed,
                      constrained_log_Z, forward_backward, marginal_decode,
                      posterior_marginals, viterbi)

__all__ = [
    "START",
    "BudgetExceededError",
    "ChainModel",
    "CompressedSequence",
    "ConstraintList",
    "ConstraintSet",
    "DecodeResult",
    "EvaluationReport",
    "ForwardBackwardResult",
    "GridWorld",
    "LabeledSequence",
    "LatticeTable",
    "LengthDistribution",
    "ObservationAlphabet",
    "OracleBudget",
    "RobotTrace",
    "StateSpace",
    "baseline_compressed",
    "compress",
    "compressed_decode",
    "compressed_marginal",
    "compressed_sequence_log_lattice",
    "constrained_log_Z",
    "constraint_log_Z",
    "default_world",
    "edit_distance",
    "eds",
    "enumerate_posterior",
    "estimate_counts",
    "exact_score",
    "forward_backward",
    "length_distribution",
    "load_dataset",
    "load_model",
    "load_world",
    "log_partition_via_table",
    "log_potential",
    "marginal_decode",
    "oracle_compressed_distribution",
    "oracle_compressed_marginal",
    "oracle_length_distribution",
    "oracle_log_partition",
    "posterior_marginals",
    "robot_dataset",
    "sample_chain",
    "save_dataset",
    "save_model",
    "sequence_log_score",
    "simulate_robot",
    "table_forward",
    "trace_to_sequence",
    "viterbi",
]
