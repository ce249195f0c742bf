"""Graph coloring with a noise-scheduled message-passing network.

Quiet-planted instance generation, a Potts-energy training loss, iterative
noisy coloring, and a simulated-annealing baseline.
"""
__version__ = "0.1.0"

from pottscolor.graph import Graph, PlantedColoring, generate_er, generate_planted, read_graph, write_graph
from pottscolor.kernels import BACKEND

__all__ = ["Graph", "PlantedColoring", "generate_er", "generate_planted", "read_graph", "write_graph", "BACKEND"]
