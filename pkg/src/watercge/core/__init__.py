from .ces import ces_calibrate, ces_rho, cet_calibrate, cet_rho, eval_ces, eval_cet, household_demand
from .institutions import institution_flows
from .model import Model, build_layout, fd_jacobian, residuals
from .params import Exogenous, Parameters
from .sets import ModelSets
from .state import Layout, SolutionState

__all__ = [
    "ces_calibrate", "ces_rho", "cet_calibrate", "cet_rho", "eval_ces", "eval_cet", "household_demand",
    "institution_flows", "Model", "build_layout", "fd_jacobian", "residuals", "Exogenous",
    "Parameters", "ModelSets", "Layout", "SolutionState",
]
