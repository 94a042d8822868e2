"""Protocol implementations on top of the engine."""

from .lchs import LchsSpec, kernel_normalization, lchs_kernel, lchs_solve, squeezed_vacuum_fock
from .qhd import qhd_minimize
from .qubo import (
    FockPartition,
    IsingProblem,
    QuboProblem,
    brute_force_minimum,
    brute_force_qubo,
    cut_size,
    encoded_diagonal,
    fock_partition_encode,
    is_vertex_cover,
    maxcut_qubo,
    partitions_without_ones,
    qubo_to_ising,
    vertex_cover_qubo,
    vqa_optimize,
)
from .rotor_qpe import circular_error, phase_state_window, rotor_qpe, wrap_angle
from .shor import choose_grid, cvdv_shor_period, shor_factor

__all__ = [
    "LchsSpec", "kernel_normalization", "lchs_kernel", "lchs_solve",
    "squeezed_vacuum_fock", "qhd_minimize", "FockPartition", "IsingProblem",
    "QuboProblem", "brute_force_minimum", "brute_force_qubo", "cut_size",
    "encoded_diagonal", "fock_partition_encode", "is_vertex_cover",
    "maxcut_qubo", "partitions_without_ones", "qubo_to_ising",
    "vertex_cover_qubo", "vqa_optimize", "circular_error",
    "phase_state_window", "rotor_qpe", "wrap_angle", "choose_grid",
    "cvdv_shor_period", "shor_factor",
]
