"""Binary optimization on qubit and Fock-encoded registers.

A QUBO (minimize x^T Q x over binary x) converts to an Ising spin problem
through x = (s+1)/2. The Ising diagonal can be evaluated either over n
qubits or over qumodes whose cutoffs 2^{k_i} follow a partition of n with
no part equal to 1 — the encoded search space has the same size and, by
construction, the same optimum.

The variational optimizer pairs a parametrized mixing circuit with a
derivative-free (Nelder-Mead) classical loop over the evaluation budget:
qubit encoding uses an Ry + CX ladder, the Fock encoding mixes amplitudes
with per-mode phase rotations conjugated by the Fock DFT plus cross-Kerr
entanglers, preserving the diagonal cost structure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..errors import OperatorError
from ..operators import fock_dft
from ..registers import Qumode, RegisterLayout, make_layout


@dataclass(frozen=True)
class QuboProblem:
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise OperatorError("Q must be square")
        if not np.allclose(q, q.T, atol=1e-12):
            raise OperatorError("Q must be symmetric")
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.q @ x)


@dataclass(frozen=True)
class IsingProblem:
    h: np.ndarray
    j: np.ndarray  # strictly upper triangular couplings
    offset: float

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def value(self, s) -> float:
        s = np.asarray(s, dtype=float)
        return float(s @ self.j @ s + self.h @ s + self.offset)

    def diagonal(self) -> np.ndarray:
        """Energy of every spin assignment, indexed by the bitstring
        (bit 0 of the index = variable 0, most significant first)."""
        n = self.n
        diag = np.empty(1 << n)
        for bits in range(1 << n):
            s = bits_to_spins(bits, n)
            diag[bits] = self.value(s)
        return diag


def bits_to_spins(bits: int, n: int) -> np.ndarray:
    """Bitstring index -> spin vector; bit i (MSB first) maps to s_i = 2x_i - 1."""
    x = np.array([(bits >> (n - 1 - i)) & 1 for i in range(n)], dtype=float)
    return 2 * x - 1


def qubo_to_ising(q) -> IsingProblem:
    """Change of variables x = (s+1)/2; value-preserving on all assignments."""
    prob = q if isinstance(q, QuboProblem) else QuboProblem(np.asarray(q))
    qm = prob.q
    n = prob.n
    j = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            j[i, k] = qm[i, k] / 2
    h = qm.sum(axis=1) / 2
    offset = (qm.sum() + np.trace(qm)) / 4
    return IsingProblem(h, j, float(offset))


def brute_force_minimum(ising: IsingProblem) -> tuple[int, float]:
    """(argmin bitstring, minimum value) by exhaustive search."""
    diag = ising.diagonal()
    arg = int(np.argmin(diag))
    return arg, float(diag[arg])


# ---------------------------------------------------------------------------
# Fock encodings


@dataclass(frozen=True)
class FockPartition:
    """Parts k_i >= 2 with sum k_i = n; induced qumode cutoffs 2^{k_i}."""

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p < 2 for p in parts):
            raise OperatorError("partitions containing 1 are excluded (no part may be < 2)")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return tuple(1 << p for p in self.parts)


def partitions_without_ones(n: int) -> list[FockPartition]:
    """All partitions of n with every part >= 2, largest-part-first order."""
    results: list[FockPartition] = []

    def rec(remaining: int, cap: int, acc: list[int]):
        if remaining == 0:
            results.append(FockPartition(tuple(acc)))
            return
        for part in range(min(cap, remaining), 1, -1):
            if remaining - part == 1:
                continue  # would force a trailing 1
            rec(remaining - part, part, acc + [part])

    rec(n, n, [])
    return results


def fock_partition_encode(n: int, partition: FockPartition):
    """Layout of qumodes with cutoffs 2^{k_i} plus the bit <-> Fock maps.

    Bits are split big-endian within each part: the first k_1 bits form the
    first mode's Fock level, and so on.
    """
    if partition.n != n:
        raise OperatorError(f"partition {partition.parts} does not sum to {n}")
    layout = make_layout([Qumode(c) for c in partition.cutoffs])

    def bits_to_coords(bits: int) -> tuple[int, ...]:
        coords = []
        shift = n
        for k in partition.parts:
            shift -= k
            coords.append((bits >> shift) & ((1 << k) - 1))
        return tuple(coords)

    def coords_to_bits(coords) -> int:
        bits = 0
        for k, c in zip(partition.parts, coords):
            if not 0 <= c < (1 << k):
                raise OperatorError(f"Fock level {c} out of range for part {k}")
            bits = (bits << k) | int(c)
        return bits

    return layout, bits_to_coords, coords_to_bits


def encoded_diagonal(ising: IsingProblem, partition: FockPartition | None) -> np.ndarray:
    """Ising energies indexed by the encoded register's flat basis index.

    With a partition, index = mixed-radix Fock index; the big-endian bit
    convention makes it coincide with the qubit-basis index.
    """
    diag = ising.diagonal()
    if partition is None:
        return diag
    layout, bits_to_coords, coords_to_bits = fock_partition_encode(ising.n, partition)
    out = np.empty(layout.total_dim)
    for bits in range(1 << ising.n):
        coords = bits_to_coords(bits)
        flat = 0
        for c, d in zip(coords, layout.dims):
            flat = flat * d + c
        out[flat] = diag[bits]
    return out


# ---------------------------------------------------------------------------
# variational optimization


def _qubit_ansatz_state(n: int, depth: int, params: np.ndarray) -> np.ndarray:
    """Ry + CX ladder; (depth + 1) rotation layers, entangling chain between."""
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1.0
    idx = 0
    tensor = state.reshape([2] * n)
    for layer in range(depth + 1):
        for q in range(n):
            th = params[idx]
            idx += 1
            c, s = math.cos(th / 2), math.sin(th / 2)
            ry = np.array([[c, -s], [s, c]])
            tensor = np.moveaxis(np.tensordot(ry, tensor, axes=(1, q)), 0, q)
        if layer < depth:
            for q in range(n - 1):
                # CX(q, q+1) in the computational basis
                t = np.moveaxis(tensor, (q, q + 1), (0, 1)).copy()
                t[1, 0], t[1, 1] = t[1, 1].copy(), t[1, 0].copy()
                tensor = np.moveaxis(t, (0, 1), (q, q + 1))
    return tensor.reshape(-1)


def _fock_ansatz_state(layout: RegisterLayout, depth: int, params: np.ndarray) -> np.ndarray:
    """Per-mode DFT-conjugated phase mixing with cross-Kerr entanglers."""
    dims = layout.dims
    n_modes = len(dims)
    tensor = np.zeros(dims, dtype=complex)
    tensor[(0,) * n_modes] = 1.0
    dfts = [fock_dft(d).matrix for d in dims]
    # start in the uniform superposition, the DFT image of the Fock vacuum
    for m in range(n_modes):
        tensor = np.moveaxis(np.tensordot(dfts[m], tensor, axes=(1, m)), 0, m)
    idx = 0
    for _ in range(depth):
        for m, d in enumerate(dims):
            theta = params[idx]
            idx += 1
            mixer = dfts[m].conj().T @ np.diag(np.exp(-1j * theta * np.arange(d))) @ dfts[m]
            tensor = np.moveaxis(np.tensordot(mixer, tensor, axes=(1, m)), 0, m)
            phi = params[idx]
            idx += 1
            tensor = np.moveaxis(
                np.tensordot(np.diag(np.exp(-1j * phi * np.arange(d))), tensor, axes=(1, m)), 0, m
            )
        for m in range(n_modes - 1):
            chi = params[idx]
            idx += 1
            na = np.arange(dims[m])[:, None]
            nb = np.arange(dims[m + 1])[None, :]
            phases = np.exp(-1j * chi * na * nb)
            t = np.moveaxis(tensor, (m, m + 1), (0, 1))
            t = t * phases.reshape(phases.shape + (1,) * (n_modes - 2))
            tensor = np.moveaxis(t, (0, 1), (m, m + 1))
    return tensor.reshape(-1)


def _param_count(encoding, n: int, depth: int, dims) -> int:
    if encoding == "qubits":
        return (depth + 1) * n
    return depth * (2 * len(dims) + max(len(dims) - 1, 0))


def vqa_optimize(problem: IsingProblem, encoding="qubits", depth: int = 2,
                 budget: int = 300, seed: int = 0) -> dict:
    """Minimize the Ising diagonal with a variational circuit.

    ``encoding`` is "qubits" or a :class:`FockPartition`. The cost is the
    expectation of the diagonal cost operator in the computational (Fock)
    basis; optimization is Nelder-Mead over at most ``budget`` cost
    evaluations. Returns the best sampled basis state; ``budget_exhausted``
    flags runs that never matched the optimizer's converged value.
    """
    n = problem.n
    if n > 16:
        raise OperatorError("desk-scale optimizer handles n <= 16")
    partition = None if encoding == "qubits" else encoding
    if partition is not None and partition.n != n:
        raise OperatorError("partition does not match problem size")
    diag = encoded_diagonal(problem, partition)

    if partition is None:
        dims = (2,) * n
        make_state = lambda p: _qubit_ansatz_state(n, depth, p)
    else:
        layout, _, _ = fock_partition_encode(n, partition)
        dims = layout.dims
        make_state = lambda p: _fock_ansatz_state(layout, depth, p)

    n_params = _param_count("qubits" if partition is None else "fock", n, depth, dims)
    rng = np.random.default_rng(seed)
    evaluations = 0
    best = {"index": None, "energy": math.inf}

    def cost(params: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        state = make_state(params)
        probs = np.abs(state) ** 2
        probs /= probs.sum()
        # track the most likely basis state seen so far
        arg = int(np.argmax(probs))
        if diag[arg] < best["energy"]:
            best["index"] = arg
            best["energy"] = float(diag[arg])
        return float(probs @ diag)

    x0 = rng.uniform(-0.4, 0.4, size=n_params)
    result = minimize(cost, x0, method="Nelder-Mead",
                      options={"maxfev": budget, "xatol": 1e-4, "fatol": 1e-9})

    if best["index"] is None:  # budget too small to evaluate anything
        raise OperatorError("optimizer budget must allow at least one evaluation")
    bits = best["index"]
    if partition is not None:
        layout, _, coords_to_bits = fock_partition_encode(n, partition)
        coords = np.unravel_index(bits, layout.dims)
        bits = coords_to_bits(tuple(int(c) for c in coords))
    assignment = [(bits >> (n - 1 - i)) & 1 for i in range(n)]
    return {
        "assignment": assignment,
        "energy": best["energy"],
        "evaluations": evaluations,
        "optimizer_value": float(result.fun),
        "budget_exhausted": bool(evaluations >= budget and not result.success),
    }


# ---------------------------------------------------------------------------
# graph problem generators


def maxcut_qubo(n: int, edges) -> QuboProblem:
    """Minimizing x^T Q x maximizes the cut: Q_ii = -deg(i), Q_ij = 1."""
    q = np.zeros((n, n))
    for i, j in edges:
        q[i, i] -= 1
        q[j, j] -= 1
        q[i, j] += 1
        q[j, i] += 1
    return QuboProblem(q)


def cut_size(edges, assignment) -> int:
    return sum(1 for i, j in edges if assignment[i] != assignment[j])


def vertex_cover_qubo(n: int, edges, penalty: float = 2.0) -> QuboProblem:
    """Minimize sum x_i + penalty * sum_(ij) (1-x_i)(1-x_j); the constant
    per-edge offset is dropped (argmin unaffected)."""
    q = np.zeros((n, n))
    for i in range(n):
        q[i, i] += 1
    for i, j in edges:
        q[i, i] -= penalty
        q[j, j] -= penalty
        q[i, j] += penalty / 2
        q[j, i] += penalty / 2
    return QuboProblem(q)


def is_vertex_cover(edges, assignment) -> bool:
    return all(assignment[i] or assignment[j] for i, j in edges)


def brute_force_qubo(prob: QuboProblem) -> tuple[list[int], float]:
    best_x, best_v = None, math.inf
    for bits in itertools.product((0, 1), repeat=prob.n):
        v = prob.value(bits)
        if v < best_v:
            best_x, best_v = list(bits), v
    return best_x, best_v
