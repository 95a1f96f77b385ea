"""Steklov eigenvalues of star-shaped planar domains and their shape optimization."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    EigendecompositionFailure,
    InsufficientResolution,
    NonpositiveRadius,
    NormalizationViolated,
    OddNodeCount,
    SeedInvalid,
    ShapeError,
    SteklovError,
)
from .geometry import (  # noqa: E402
    BoundaryGrid,
    FourierShape,
    area,
    build_grid,
    evaluate_radius,
    perimeter,
    perturbation_velocity,
)
from .nystrom import OperatorPair, assemble_pair  # noqa: E402
from .eigensolver import (  # noqa: E402
    SteklovSpectrum,
    evaluate_field,
    multiplicity_clusters,
    normalized_eigenvalue,
    solve_spectrum,
    steklov_spectrum,
)
from .shapegrad import GradientReport, eigenvalue_derivative, objective_gradient  # noqa: E402
from .optimizer import (  # noqa: E402
    OptimizationRun,
    ProblemSpec,
    expected_multiplicity,
    interp_seed,
    optimize,
    optimize_restarts,
    verify_conjecture,
)
from .estimators import (  # noqa: E402
    SteklovEigenfunction,
    SteklovShapeOptimizer,
    SteklovTransformer,
)
