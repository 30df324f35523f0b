"""ballqp: semidefinite relaxations for quadratic programs over ball intersections."""

from .analysis import (
    RelaxationReport,
    evaluate_relaxation,
    extract_candidate,
    gap_closure,
    grid_oracle,
    local_refine,
    relative_gap,
)
from .bench import BenchResult, ExperimentConfig, run_example, run_table
from .cones import Cone, ConeKind, cone_residual, smat, svec, svec_dim
from .formats import export_cbf, export_sdpa, parse_cbf, parse_sdpa
from .generators import (
    DEFAULT_MASTER_SEED,
    generate_batch,
    generate_instance,
    generate_screened_batch,
    stream_seed,
)
from .instances import (
    AffineMap,
    Ball,
    BallQpInstance,
    LinearTwoInstance,
    feasibility_violation,
    instance_from_dict,
    instance_to_dict,
    lift,
    load_instance,
    normalize,
    objective,
    save_instance,
)
from .operators import arrow, boxtimes, j_form, j_matrix, k_matrix, two
from .program import ConicProgram, ConicSolution, LinearImageConstraint, SolveStatus
from .relaxations import RelaxationKind, build_relaxation, resolve_kind
from .solve import SolverOptions, solve
from .verify import (
    VerifyReport,
    check_j_lemma,
    counterexample_data,
    counterexample_instance,
    run_conjecture_scan,
    verify_counterexample,
    verify_theorem_exactness,
)

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "Ball",
    "BallQpInstance",
    "BenchResult",
    "Cone",
    "ConeKind",
    "ConicProgram",
    "ConicSolution",
    "DEFAULT_MASTER_SEED",
    "ExperimentConfig",
    "LinearImageConstraint",
    "LinearTwoInstance",
    "RelaxationKind",
    "RelaxationReport",
    "SolveStatus",
    "SolverOptions",
    "VerifyReport",
    "arrow",
    "boxtimes",
    "build_relaxation",
    "check_j_lemma",
    "cone_residual",
    "counterexample_data",
    "counterexample_instance",
    "evaluate_relaxation",
    "export_cbf",
    "export_sdpa",
    "extract_candidate",
    "feasibility_violation",
    "gap_closure",
    "generate_batch",
    "generate_instance",
    "generate_screened_batch",
    "grid_oracle",
    "instance_from_dict",
    "instance_to_dict",
    "j_form",
    "j_matrix",
    "k_matrix",
    "lift",
    "load_instance",
    "local_refine",
    "normalize",
    "objective",
    "parse_cbf",
    "parse_sdpa",
    "relative_gap",
    "resolve_kind",
    "run_conjecture_scan",
    "run_example",
    "run_table",
    "save_instance",
    "smat",
    "solve",
    "stream_seed",
    "svec",
    "svec_dim",
    "two",
    "verify_counterexample",
    "verify_theorem_exactness",
]
