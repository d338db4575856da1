"""Learning partially unitary maps and mixed unitary channels from state mappings."""

from . import matfun, qcqp, states, superop
from .errors import *  # noqa: F401,F403
from .qcqp import Solution, SolverConfig, solve
from .states import MappingDataset
from .superop import Superoperator, build

__version__ = "0.1.0"
