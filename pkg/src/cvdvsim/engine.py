"""Statevector engine: strided gate application, trajectory execution with
mid-circuit measurement/reset, expectations, Trotter evolution, and
two-time correlation machinery.

Gates update amplitudes as (I ⊗ ... ⊗ U ⊗ ... ⊗ I) |psi> by reshaping the
amplitude vector to the layout's mixed-radix tensor and contracting over
the target axes; the full-space matrix is never materialized.

Randomness uses the counter-based Philox generator with explicit seeds.
Per-shot streams are derived from (seed, shot index) so results do not
depend on execution order of shots.

Concurrency contract: one circuit execution owns its state exclusively.
Independent executions (shots, optimizer candidates) may run concurrently
with no shared mutable data; callers merge results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GridUnderflowError,
    LayoutMismatchError,
    MeasurementError,
    UnsupportedTermError,
)
from .hamiltonians import HamiltonianExpr
from .ir import Circuit, GateInstr, MeasureInstr, ResetInstr, Barrier, gate_operator
from .operators import LocalOperator, exp_i_hermitian
from .registers import HybridState, Qumode, ensure_capacity, init_vacuum

HOMODYNE_POINTS = 4096


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Counter-based per-shot stream; independent of shot execution order."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, shot], dtype=np.uint64)))


# ---------------------------------------------------------------------------
# gate application


def apply_gate(state: HybridState, op: LocalOperator, targets) -> HybridState:
    """Apply a 1- or 2-mode (or merged-block) operator to the given modes."""
    targets = tuple(int(t) for t in targets)
    layout = state.layout
    if len(targets) != op.arity:
        raise LayoutMismatchError(
            f"operator acts on {op.arity} modes but {len(targets)} targets given"
        )
    if len(set(targets)) != len(targets):
        raise LayoutMismatchError("gate targets must be distinct modes")
    for i, t in enumerate(targets):
        if not 0 <= t < layout.n_modes:
            raise LayoutMismatchError(f"target {t} out of range")
        mode = layout.modes[t]
        if mode.dim != op.dims[i]:
            raise LayoutMismatchError(
                f"operator dim {op.dims[i]} does not match mode {t} dim {mode.dim}"
            )
        want = op.kinds[i]
        if want is not None and mode.kind != want:
            raise LayoutMismatchError(
                f"operator expects a {want} at position {i}, mode {t} is a {mode.kind}"
            )
    psi = state.amplitudes.reshape(layout.dims)
    k = len(targets)
    psi = np.moveaxis(psi, targets, range(k))
    moved_shape = psi.shape
    block = math.prod(op.dims)
    psi = op.matrix @ psi.reshape(block, -1)
    psi = np.moveaxis(psi.reshape(moved_shape), range(k), targets)
    state.amplitudes = np.ascontiguousarray(psi.reshape(-1))
    return state


def apply_expr(state: HybridState, expr: HamiltonianExpr) -> HybridState:
    """|psi> -> H|psi| for an arbitrary expression (generally not unitary)."""
    out = np.zeros_like(state.amplitudes)
    for t in expr.terms:
        if not t.factors:
            out += t.coeff * state.amplitudes
            continue
        work = state.copy()
        for mode, op in t.factors:
            apply_gate(work, op, (mode,))
        out += t.coeff * work.amplitudes
    result = HybridState(state.layout, out)
    return result


# ---------------------------------------------------------------------------
# measurement primitives


def mode_marginal(state: HybridState, mode: int) -> np.ndarray:
    """Born probabilities of the mode's basis levels (unnormalized branch)."""
    dims = state.layout.dims
    probs = np.abs(state.amplitudes.reshape(dims)) ** 2
    axes = tuple(i for i in range(len(dims)) if i != mode)
    return probs.sum(axis=axes)


def reduced_density(state: HybridState, mode: int) -> np.ndarray:
    """Reduced density matrix of one mode (normalized to the state norm)."""
    dims = state.layout.dims
    d = dims[mode]
    psi = np.moveaxis(state.amplitudes.reshape(dims), mode, 0).reshape(d, -1)
    return psi @ psi.conj().T


def collapse_level(state: HybridState, mode: int, level: int, renormalize: bool = True) -> float:
    """Project a mode onto a basis level; returns the branch probability."""
    dims = state.layout.dims
    psi = np.moveaxis(state.amplitudes.reshape(dims), mode, 0)
    prob = float(np.sum(np.abs(psi[level]) ** 2))
    keep = psi[level].copy()
    psi[...] = 0
    psi[level] = keep
    state.amplitudes = np.ascontiguousarray(
        np.moveaxis(psi, 0, mode).reshape(-1)
    )
    state.squared_norm = prob
    if renormalize:
        if prob <= 0:
            raise MeasurementError("collapse onto a zero-norm branch")
        state.amplitudes /= math.sqrt(prob)
        state.squared_norm = 1.0
    return prob


def sample_level(state: HybridState, mode: int, rng: np.random.Generator) -> int:
    probs = mode_marginal(state, mode)
    total = probs.sum()
    if total <= 1e-300:
        raise MeasurementError(f"measurement on zero-norm branch (mode {mode})")
    return int(rng.choice(len(probs), p=probs / total))


def measure_level(state: HybridState, mode: int, rng: np.random.Generator) -> int:
    """Born-rule sample of a mode's level; collapses and renormalizes."""
    level = sample_level(state, mode, rng)
    collapse_level(state, mode, level)
    return level


def reset_mode(state: HybridState, mode: int, rng: np.random.Generator) -> None:
    """Trajectory-style reset: measure, then relabel the outcome to level 0."""
    level = measure_level(state, mode, rng)
    if level != 0:
        dims = state.layout.dims
        psi = np.moveaxis(state.amplitudes.reshape(dims), mode, 0)
        psi[0] = psi[level]
        psi[level] = 0
        state.amplitudes = np.ascontiguousarray(np.moveaxis(psi, 0, mode).reshape(-1))


def postselect_mode(state: HybridState, mode: int, target_vec: np.ndarray) -> float:
    """Project one mode onto an arbitrary normalized mode vector.

    The surviving factor state of the mode is ``target_vec``; the state is
    left unnormalized with squared_norm equal to the branch probability.
    """
    dims = state.layout.dims
    d = dims[mode]
    if target_vec.shape != (d,):
        raise LayoutMismatchError("postselection vector does not match mode dimension")
    psi = np.moveaxis(state.amplitudes.reshape(dims), mode, 0)
    overlap = np.tensordot(target_vec.conj(), psi, axes=(0, 0))
    psi = np.multiply.outer(target_vec, overlap)
    state.amplitudes = np.ascontiguousarray(np.moveaxis(psi, 0, mode).reshape(-1))
    return state.refresh_norm()


# ---------------------------------------------------------------------------
# homodyne


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """phi_n(x) for n = 0..n_max-1 via the stable normalized recurrence.

    phi_{n+1} = sqrt(2/(n+1)) x phi_n - sqrt(n/(n+1)) phi_{n-1}; each step
    works with already-normalized functions, keeping the recursion stable.
    """
    out = np.zeros((n_max, x.size))
    out[0] = np.pi ** (-0.25) * np.exp(-(x**2) / 2)
    if n_max > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def homodyne_grid(cutoff: int, points: int = HOMODYNE_POINTS) -> np.ndarray:
    """x in [-x_max, x_max], x_max = sqrt(2*cutoff) + 4: classically allowed
    region of every representable state plus Gaussian tails."""
    x_max = math.sqrt(2 * cutoff) + 4
    return np.linspace(-x_max, x_max, points)


def quadrature_density(state: HybridState, mode: int, angle: float,
                       points: int = HOMODYNE_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """(grid, probability density) of the rotated quadrature
    x_theta = cos(theta) x + sin(theta) p for one mode."""
    d = state.layout.dims[mode]
    if not isinstance(state.layout.modes[mode], Qumode):
        raise LayoutMismatchError("homodyne requires a qumode target")
    x = homodyne_grid(d, points)
    phi = hermite_functions(d, x)
    rho = reduced_density(state, mode)
    phases = np.exp(-1j * angle * np.arange(d))
    v = phases[:, None] * phi  # v[n, i] = e^{-i n theta} phi_n(x_i)
    density = np.einsum("ni,nm,mi->i", v.conj(), rho, v).real
    return x, np.maximum(density, 0.0)


def measure_homodyne(state: HybridState, mode: int, angle: float,
                     rng: np.random.Generator) -> float:
    """Sample the rotated quadrature; collapse to the nearest grid eigenvector.

    The quadrature wavefunction is evaluated by Hermite-function expansion
    of the mode's amplitudes on the finite grid.
    """
    x, density = quadrature_density(state, mode, angle)
    dx = x[1] - x[0]
    weights = density * dx
    total = float(weights.sum())
    norm = state.squared_norm if state.squared_norm > 0 else 1.0
    if total <= 1e-300:
        raise MeasurementError(f"homodyne on zero-norm branch (mode {mode})")
    if abs(total - norm) > 1e-6 * max(norm, 1.0):
        raise GridUnderflowError(
            f"quadrature mass {total / norm:.9f} of the state is on-grid; "
            "wavefunction leaks off the homodyne grid"
        )
    i = int(rng.choice(x.size, p=weights / total))
    sample = float(x[i])
    d = state.layout.dims[mode]
    phi = hermite_functions(d, np.array([sample]))[:, 0]
    eigvec = np.exp(1j * angle * np.arange(d)) * phi
    nv = np.linalg.norm(eigvec)
    if nv <= 0:
        raise MeasurementError("degenerate grid eigenvector")
    postselect_mode(state, mode, eigvec / nv)
    state.normalize()
    return sample


def homodyne_samples(state: HybridState, mode: int, angle: float, n: int,
                     seed: int) -> np.ndarray:
    """n independent single-shot quadrature samples (fresh state per shot).

    Statistics helper: samples the same pre-measurement density n times
    rather than collapsing a shared state.
    """
    x, density = quadrature_density(state, mode, angle)
    dx = x[1] - x[0]
    weights = density * dx
    total = float(weights.sum())
    if total <= 1e-300:
        raise MeasurementError("homodyne on zero-norm branch")
    rng = shot_rng(seed, 0)
    idx = rng.choice(x.size, size=n, p=weights / total)
    return x[idx]


# ---------------------------------------------------------------------------
# circuit execution


@dataclass
class MeasurementRecord:
    instr: int
    mode: int
    value: float | int
    shot: int = 0


@dataclass
class SimResult:
    """Execution result; serializes to the documented JSON schema."""

    shots: int
    measurements: list[MeasurementRecord] = field(default_factory=list)
    expectations: dict = field(default_factory=dict)
    norm: float = 1.0
    final_state: HybridState | None = None

    def to_json_dict(self) -> dict:
        return {
            "shots": self.shots,
            "measurements": [
                {"instr": m.instr, "mode": m.mode, "value": m.value}
                for m in self.measurements
            ],
            "expectations": dict(self.expectations),
            "norm": self.norm,
        }


def run(circuit: Circuit, seed: int = 0, shots: int = 1) -> SimResult:
    """Execute a circuit; deterministic given (seed, shots).

    Mid-circuit measurements sample the Born rule and collapse eagerly;
    resets project the mode to its ground level and renormalize. With no
    measurement instructions and shots == 1 the final statevector is kept
    on the result.
    """
    ensure_capacity(circuit.layout)
    from .ir import validate  # local import to avoid cycle at module load

    diags = [d for d in validate(circuit) if d.severity == "error"]
    if diags:
        d = diags[0]
        from .errors import CircuitTypeError

        raise CircuitTypeError(d.message, d.line, d.col)

    records: list[MeasurementRecord] = []
    final = None
    norm = 1.0
    for shot in range(shots):
        rng = shot_rng(seed, shot)
        state = init_vacuum(circuit.layout)
        for idx, instr in enumerate(circuit.instructions):
            if isinstance(instr, Barrier):
                continue
            if isinstance(instr, GateInstr):
                apply_gate(state, gate_operator(instr, circuit.layout), instr.targets)
            elif isinstance(instr, ResetInstr):
                reset_mode(state, instr.mode, rng)
            elif isinstance(instr, MeasureInstr):
                if instr.basis == "homodyne":
                    value = measure_homodyne(state, instr.mode, instr.angle, rng)
                else:
                    level = measure_level(state, instr.mode, rng)
                    value = circuit.measured_value(instr.mode, level)
                records.append(MeasurementRecord(idx, instr.mode, value, shot))
            else:  # pragma: no cover
                raise TypeError(f"unknown instruction {instr!r}")
        norm = state.refresh_norm()
        final = state
    result = SimResult(shots=shots, measurements=records, norm=norm)
    if shots == 1:
        result.final_state = final
    return result


# ---------------------------------------------------------------------------
# expectations and evolution


def expectation(state: HybridState, expr: HamiltonianExpr) -> float:
    """<psi|H|psi>/<psi|psi> for a Hermitian expression."""
    expr.require_hermitian()
    hpsi = apply_expr(state, expr)
    value = complex(np.vdot(state.amplitudes, hpsi.amplitudes))
    norm = float(np.vdot(state.amplitudes, state.amplitudes).real)
    value /= norm
    assert abs(value.imag) <= 1e-10 * max(1.0, abs(value.real)), (
        f"Hermitian expectation has imaginary residue {value.imag:.3e}"
    )
    return value.real


class TrotterPlan:
    """Precomputed per-step unitaries for a symmetric product formula."""

    def __init__(self, expr: HamiltonianExpr, dt: float):
        blocks = expr.grouped_blocks()
        self.global_phase = 1.0 + 0.0j
        steps = []
        for modes, h in blocks:
            if not modes:
                self.global_phase *= np.exp(-1j * dt * h[0, 0])
                continue
            res = float(np.max(np.abs(h - h.conj().T)))
            if res > 1e-10:
                from .errors import HermiticityError

                raise HermiticityError(
                    f"Trotter block on modes {modes} is not Hermitian (residual {res:.3e})"
                )
            steps.append((modes, h))
        self.blocks = steps
        self.dt = dt
        self._halves = [exp_i_hermitian(h, dt / 2) for _, h in steps[:-1]]
        self._full = exp_i_hermitian(steps[-1][1], dt) if steps else None

    def apply(self, state: HybridState) -> HybridState:
        n = len(self.blocks)
        for i in range(n - 1):
            apply_gate(state, _block_op(self._halves[i], self.blocks[i][0], state), self.blocks[i][0])
        if self._full is not None:
            apply_gate(state, _block_op(self._full, self.blocks[-1][0], state), self.blocks[-1][0])
        for i in reversed(range(n - 1)):
            apply_gate(state, _block_op(self._halves[i], self.blocks[i][0], state), self.blocks[i][0])
        if self.global_phase != 1.0:
            state.amplitudes *= self.global_phase
        return state


def _block_op(matrix: np.ndarray, modes: tuple[int, ...], state: HybridState) -> LocalOperator:
    dims = tuple(state.layout.dims[m] for m in modes)
    return LocalOperator(matrix, dims)


def evolve_trotter(state: HybridState, expr: HamiltonianExpr, t: float,
                   steps: int) -> HybridState:
    """Second-order (symmetric) Trotter evolution under a Hermitian sum.

    Each grouped term is exponentiated on its own <= 3-mode block
    (truncate-then-exponentiate), so each factor is exactly unitary.
    """
    if steps < 1:
        raise UnsupportedTermError("steps must be >= 1")
    expr.require_hermitian()
    if t == 0:
        return state
    plan = TrotterPlan(expr, t / steps)
    for _ in range(steps):
        plan.apply(state)
    return state


def evolve_time_dependent(state: HybridState, builder, t_final: float,
                          steps: int) -> HybridState:
    """Midpoint-rule evolution: step k uses H((k + 1/2) dt)."""
    if steps < 1:
        raise UnsupportedTermError("steps must be >= 1")
    dt = t_final / steps
    for k in range(steps):
        expr = builder((k + 0.5) * dt)
        evolve_trotter(state, expr, dt, 1)
    return state


def two_time_correlation(state: HybridState, expr: HamiltonianExpr,
                         a_op: HamiltonianExpr, b_op: HamiltonianExpr,
                         t: float, steps: int = 64) -> complex:
    """C(t) = <psi| A(t) B(0) |psi> for a pure state.

    Computed by direct statevector arithmetic: phi1 = U(t) B psi,
    phi2 = U(t) psi, C = <phi2| A phi1>.
    """
    phi1 = apply_expr(state, b_op)
    phi2 = state.copy()
    if t != 0:
        evolve_trotter(phi1, expr, t, steps)
        evolve_trotter(phi2, expr, t, steps)
    a_phi1 = apply_expr(phi1, a_op)
    return complex(np.vdot(phi2.amplitudes, a_phi1.amplitudes))


def correlation_spectrum(samples: np.ndarray, dt: float, eta: float
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Re sigma(omega) from uniform C(t) samples.

    Discrete Fourier transform of e^{-eta t} C(t) with the physics sign
    convention (integrand e^{+i omega t}); eta > 0 regularizes in place of
    the infinitesimal 0+. Returns (omega grid, real part), lowest frequency
    first.
    """
    samples = np.asarray(samples, dtype=complex)
    if samples.size < 4:
        raise MeasurementError("correlation spectrum needs at least 4 samples")
    if eta <= 0:
        raise MeasurementError("damping eta must be positive")
    n = samples.size
    t = np.arange(n) * dt
    damped = samples * np.exp(-eta * t)
    spectrum = np.fft.ifft(damped) * n * dt  # ifft carries e^{+2 pi i jk/n}
    omega = 2 * np.pi * np.fft.fftfreq(n, d=dt)
    order = np.argsort(omega)
    return omega[order], spectrum.real[order]


def survival_probability(psi0: HybridState, expr: HamiltonianExpr, t: float,
                         steps: int = 64) -> float:
    """|<psi(0)| e^{-iHt} |psi(0)>|^2."""
    from .registers import inner_product

    evolved = psi0.copy()
    evolve_trotter(evolved, expr, t, steps)
    amp = inner_product(psi0, evolved)
    return float(abs(amp) ** 2)
