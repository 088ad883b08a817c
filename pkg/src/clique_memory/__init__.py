"""Clique-based associative memory.

Messages of ``c`` letters over an alphabet of size ``l`` are stored as
cliques in a network of ``c*l`` threshold neurons; retrieval runs threshold
dynamics on the integer co-occurrence matrix.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .dynamics import (
    ConvergenceReport,
    energy_parallel,
    energy_sequential,
    gb_step,
    local_field,
    phi,
    run,
    step_parallel,
    sweep_sequential,
)
from .model import (
    BallSpec,
    ModelParams,
    corrupt,
    decode,
    encode,
    hamming,
    read_messages,
    sample_messages,
    substream,
    write_messages,
)
from .network import BinaryAdjacency, WeightMatrix, build_binary, build_weights, edge_stats

__all__ = [
    "BACKEND",
    "BallSpec",
    "BinaryAdjacency",
    "ConvergenceReport",
    "ModelParams",
    "WeightMatrix",
    "build_binary",
    "build_weights",
    "corrupt",
    "decode",
    "edge_stats",
    "encode",
    "energy_parallel",
    "energy_sequential",
    "gb_step",
    "hamming",
    "local_field",
    "phi",
    "read_messages",
    "run",
    "sample_messages",
    "step_parallel",
    "substream",
    "sweep_sequential",
    "write_messages",
]
