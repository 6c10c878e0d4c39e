"""Low-discrepancy point sets: classical constructions, learned
message-passing point sets, exact discrepancy measures, and a
quasi-Monte Carlo option-pricing harness.
"""

from .points import PointSet, ProjectionIndexSet, project, read_points, write_points
from .generators import (
    GeneratorSpec,
    fibonacci_set,
    generate,
    halton,
    hammersley,
    korobov,
    lifted_sobol,
    random_shift,
    rank1_lattice,
    sobol,
    uniform_random,
    van_der_corput,
)
from .discrepancy import (
    BACKEND,
    DiscrepancyReport,
    ProjectionSpec,
    hickernell_p2,
    local_discrepancy_field,
    star_discrepancy,
    warnock_l2_squared,
)
from .model import Graph, MpmcModel, build_radius_graph, forward, init_model
from .training import TrainConfig, TrainResult, random_search, train
from .finance import AsianOptionConfig, asian_payoff, estimate_option

__version__ = "0.1.0"

__all__ = [
    "AsianOptionConfig",
    "BACKEND",
    "DiscrepancyReport",
    "GeneratorSpec",
    "Graph",
    "MpmcModel",
    "PointSet",
    "ProjectionIndexSet",
    "ProjectionSpec",
    "TrainConfig",
    "TrainResult",
    "__version__",
    "asian_payoff",
    "build_radius_graph",
    "estimate_option",
    "fibonacci_set",
    "forward",
    "init_model",
    "random_search",
    "train",
    "generate",
    "halton",
    "hammersley",
    "hickernell_p2",
    "korobov",
    "lifted_sobol",
    "local_discrepancy_field",
    "project",
    "random_shift",
    "rank1_lattice",
    "read_points",
    "sobol",
    "star_discrepancy",
    "uniform_random",
    "van_der_corput",
    "warnock_l2_squared",
    "write_points",
]
