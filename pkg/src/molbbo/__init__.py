"""Surrogate-based black-box optimization over valence-valid molecular graphs.

A Gaussian-process surrogate's expected improvement is maximized by an
evolutionary algorithm over molecular graphs; chosen candidates are scored by
a pluggable exact objective and fed back into the training set.  Includes an
EA baseline, synthetic objectives, an external-evaluator protocol, and an
ECDF/ERT/learning-curve benchmark harness.
"""

from .graph import (
    ChemistryError,
    GraphError,
    MolecularGraph,
    SmilesSyntaxError,
    canonical_key,
    parse_smiles,
    write_smiles,
)
from .graphcore import BACKEND as GRAPHCORE_BACKEND
from .shingles import (
    CapacityError,
    ShingleDictionary,
    encode,
    extract_shingles,
    sparse_encode,
)
from .gp import (
    DOT_PRODUCT,
    RBF,
    GpModel,
    KernelSpec,
    Prediction,
    expected_improvement,
    fit,
    kernel_eval,
    predict,
)
from .evolution import (
    EaConfig,
    MutationExhausted,
    MutationOp,
    apply_mutation,
    ea_maximize,
    enumerate_valid_mutations,
    mutate,
)
from .objectives import (
    BudgetExhausted,
    CachedObjective,
    ObjectiveError,
    ObjectiveSpec,
    ObjectiveTimeout,
    make_objective,
)
from .bbo import (
    BboConfig,
    EvaluatedMolecule,
    ObjectiveUnavailable,
    run_bbo,
    run_ea_baseline,
)
from .runlog import RunLog, load_jsonl, write_jsonl
from .bench import TargetGrid, ecdf, ert, learning_curve

__version__ = "0.1.0"

__all__ = [
    "BboConfig",
    "BudgetExhausted",
    "CachedObjective",
    "CapacityError",
    "ChemistryError",
    "DOT_PRODUCT",
    "EaConfig",
    "EvaluatedMolecule",
    "GpModel",
    "GraphError",
    "GRAPHCORE_BACKEND",
    "KernelSpec",
    "MolecularGraph",
    "MutationExhausted",
    "MutationOp",
    "ObjectiveError",
    "ObjectiveSpec",
    "ObjectiveTimeout",
    "ObjectiveUnavailable",
    "Prediction",
    "RBF",
    "RunLog",
    "ShingleDictionary",
    "SmilesSyntaxError",
    "TargetGrid",
    "apply_mutation",
    "canonical_key",
    "ea_maximize",
    "ecdf",
    "encode",
    "enumerate_valid_mutations",
    "ert",
    "expected_improvement",
    "extract_shingles",
    "fit",
    "kernel_eval",
    "learning_curve",
    "load_jsonl",
    "make_objective",
    "mutate",
    "parse_smiles",
    "predict",
    "run_bbo",
    "run_ea_baseline",
    "sparse_encode",
    "write_jsonl",
    "write_smiles",
]
