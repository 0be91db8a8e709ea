"""Toy simulator for entanglement-loop quantum events and a transactional wave cascade."""
from . import events, gates, graph, hilbert, transact
from .errors import LooplineError

__version__ = "0.1.0"

__all__ = ["events", "gates", "graph", "hilbert", "transact", "LooplineError", "__version__"]
