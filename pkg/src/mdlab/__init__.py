"""Pseudospectral massive Maxwell-Dirac simulator (Lorenz gauge) and analysis harness."""
__version__ = "0.1.0"

from .grid import ContractError, BudgetError, Field, FourierGrid  # noqa: E402
from .state import DataRecipe, MDState, make_initial_data  # noqa: E402
from .evolution import IntegratorConfig, SimulationError, run, step  # noqa: E402

__all__ = [
    "__version__", "ContractError", "BudgetError", "Field", "FourierGrid", "DataRecipe", "MDState",
    "make_initial_data", "IntegratorConfig", "SimulationError", "run", "step",
]
