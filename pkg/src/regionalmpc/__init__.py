"""Linear MPC with reusable affine feedback laws on families of polytopes."""

from .errors import RegionalMpcError
from .model import HalfspacePolytope, LtiSystem, OcpSpec, load_config, save_config
from .lqr import complete_ocp, invariant_terminal_set, lqr_gain, solve_dare
from .qp import ActiveSet, QpResult, solve_qp

__all__ = [
    "ActiveSet",
    "HalfspacePolytope",
    "LtiSystem",
    "OcpSpec",
    "QpResult",
    "RegionalMpcError",
    "complete_ocp",
    "invariant_terminal_set",
    "load_config",
    "lqr_gain",
    "save_config",
    "solve_dare",
    "solve_qp",
]

__version__ = "0.1.0"
