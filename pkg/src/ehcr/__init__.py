"""Joint sub-channel allocation and harvesting-ratio optimization for
energy-harvesting cognitive-radio IoT networks."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    InfeasibleDevice,
    InfeasibleScenario,
    InstanceTooLarge,
    InvalidScenario,
    ModelError,
    NoFeasibleSolution,
)
from .instant import SolverTrace, optimize_mu_local, solve_instant  # noqa: E402
from .objective import check_feasibility, evaluate  # noqa: E402
from .oracle import OracleConfig, solve_oracle  # noqa: E402
from .report import SolveReport, gap  # noqa: E402
from .scenario import Allocation, Scenario, generate_scenario  # noqa: E402
from .simulator import SimConfig, run_simulation  # noqa: E402
