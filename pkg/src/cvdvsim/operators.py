"""Mode-local operator and gate constructors under fixed conventions.

Convention sheet (fixed once, everything downstream assumes these):

* hbar = 1
* x = (a + a†)/sqrt(2),  p = (a - a†)/(i sqrt(2)),  so [x, p] = i and the
  vacuum has variance 1/2 in both quadratures
* displacement  D(alpha) = exp(alpha a† - alpha* a)
* squeeze       S(z) = exp((z* a² - z a†²)/2); real z = r > 0 squeezes x
* beamsplitter  B(theta, phi) = exp(theta (e^{i phi} a†b - e^{-i phi} a b†))
* conditional displacement exp(-i param sigma_axis ⊗ quadrature), qubit first
* Fock DFT      F[j, k] = e^{2 pi i j k / d} / sqrt(d)

Truncation policy: generators are truncated to the cutoff first and then
exponentiated, which makes every gate exactly unitary on the simulated
space. Accuracy relative to the untruncated gate is the caller's cutoff
responsibility, surfaced by :class:`LeakageWarning`.

All operators are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .errors import InsufficientCutoffError, LeakageWarning, OperatorError

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class LocalOperator:
    """Dense operator acting on one or two modes.

    ``dims`` gives the dimension per target mode (matrix dimension is their
    product, first target most significant). ``kinds`` optionally restricts
    the mode kind per target; ``None`` allows any mode of matching dimension.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    kinds: tuple[str | None, ...] = field(default=None)
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", mat)
        if self.kinds is None:
            object.__setattr__(self, "kinds", (None,) * len(self.dims))
        d = math.prod(self.dims)
        if mat.shape != (d, d):
            raise OperatorError(
                f"matrix shape {mat.shape} does not match target dims {self.dims}"
            )
        if len(self.kinds) != len(self.dims):
            raise OperatorError("kinds and dims must have equal length")
        if self.unitary:
            res = unitarity_residual(mat)
            if res > UNITARY_TOL:
                raise OperatorError(f"unitarity residual {res:.3e} > {UNITARY_TOL}")
        if self.hermitian:
            res = float(np.max(np.abs(mat - mat.conj().T)))
            if res > HERMITIAN_TOL:
                raise OperatorError(f"hermiticity residual {res:.3e} > {HERMITIAN_TOL}")

    @property
    def arity(self) -> int:
        return len(self.dims)

    def dagger(self) -> "LocalOperator":
        return LocalOperator(self.matrix.conj().T, self.dims, self.kinds,
                             hermitian=self.hermitian, unitary=self.unitary)


def unitarity_residual(mat: np.ndarray) -> float:
    d = mat.shape[0]
    return float(np.max(np.abs(mat.conj().T @ mat - np.eye(d))))


def exp_i_hermitian(h: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """exp(-i*scale*h) for Hermitian ``h`` via eigendecomposition.

    Exactly unitary up to rounding, independent of the generator norm.
    """
    vals, vecs = eigh(h)
    phases = np.exp(-1j * scale * vals)
    return (vecs * phases) @ vecs.conj().T


def _unitary_from_skew(generator: np.ndarray) -> np.ndarray:
    """exp(G) for skew-Hermitian G, via exp(-i H) with H = iG Hermitian."""
    h = 1j * generator
    h = (h + h.conj().T) / 2  # scrub rounding asymmetry
    return exp_i_hermitian(h)


# ---------------------------------------------------------------------------
# elementary mode operators


def annihilation(d: int) -> LocalOperator:
    """Bosonic annihilation operator: <n-1|a|n> = sqrt(n)."""
    if d < 2:
        raise OperatorError("cutoff must be >= 2")
    return LocalOperator(np.diag(np.sqrt(np.arange(1.0, d)), k=1), (d,), ("qumode",))


def creation(d: int) -> LocalOperator:
    return annihilation(d).dagger()


def number(d: int) -> LocalOperator:
    return LocalOperator(np.diag(np.arange(float(d))), (d,), ("qumode",), hermitian=True)


def quadratures(d: int) -> tuple[LocalOperator, LocalOperator]:
    """(x, p) with x=(a+a†)/sqrt(2), p=(a-a†)/(i sqrt(2)).

    [x, p] = i I holds on the interior block; the deviation is confined to
    the last Fock level by truncation.
    """
    a = annihilation(d).matrix
    x = (a + a.conj().T) / math.sqrt(2)
    p = (a - a.conj().T) / (1j * math.sqrt(2))
    return (
        LocalOperator(x, (d,), ("qumode",), hermitian=True),
        LocalOperator(p, (d,), ("qumode",), hermitian=True),
    )


def _leakage_check(predicted_occupation: float, d: int, what: str):
    if predicted_occupation > d / 4:
        warnings.warn(
            f"{what}: predicted occupation {predicted_occupation:.3g} exceeds "
            f"cutoff/4 = {d / 4:.3g}; expect truncation leakage",
            LeakageWarning,
            stacklevel=3,
        )


def displacement(alpha: complex, d: int) -> LocalOperator:
    """D(alpha) = exp(alpha a† - alpha* a), truncate-then-exponentiate."""
    _leakage_check(abs(alpha) ** 2, d, f"displacement(alpha={alpha})")
    a = annihilation(d).matrix
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return LocalOperator(_unitary_from_skew(gen), (d,), ("qumode",), unitary=True)


def squeeze(z: complex, d: int) -> LocalOperator:
    """S(z) = exp((z* a² - z a†²)/2), truncate-then-exponentiate."""
    _leakage_check(math.sinh(abs(z)) ** 2, d, f"squeeze(z={z})")
    a = annihilation(d).matrix
    a2 = a @ a
    gen = (np.conj(z) * a2 - z * a2.conj().T) / 2
    return LocalOperator(_unitary_from_skew(gen), (d,), ("qumode",), unitary=True)


def phase_rotation(theta: float, d: int) -> LocalOperator:
    """R(theta) = exp(-i theta n), free evolution of the mode."""
    return LocalOperator(
        np.diag(np.exp(-1j * theta * np.arange(d))), (d,), ("qumode",), unitary=True
    )


def beamsplitter(theta: float, phi: float, d1: int, d2: int) -> LocalOperator:
    """exp(theta (e^{i phi} a†b - e^{-i phi} a b†)) on the product space."""
    if d1 < 2 or d2 < 2:
        raise OperatorError("beamsplitter cutoffs must be >= 2")
    a = annihilation(d1).matrix
    b = annihilation(d2).matrix
    ab_dag = np.kron(a.conj().T, b)
    gen = theta * (np.exp(1j * phi) * ab_dag - np.exp(-1j * phi) * ab_dag.conj().T)
    return LocalOperator(
        _unitary_from_skew(gen), (d1, d2), ("qumode", "qumode"), unitary=True
    )


def kerr(chi: float, d: int) -> LocalOperator:
    """diag exp(-i chi n²); exactly unitary."""
    n = np.arange(d)
    return LocalOperator(np.diag(np.exp(-1j * chi * n**2)), (d,), ("qumode",), unitary=True)


def cross_kerr(chi: float, d1: int, d2: int) -> LocalOperator:
    """diag exp(-i chi n⊗m); exactly unitary."""
    n = np.arange(d1)
    m = np.arange(d2)
    phases = np.exp(-1j * chi * np.outer(n, m).reshape(-1))
    return LocalOperator(np.diag(phases), (d1, d2), ("qumode", "qumode"), unitary=True)


def fock_dft(d: int) -> LocalOperator:
    """F[j,k] = e^{2 pi i jk/d}/sqrt(d); maps Fock states to phase states."""
    j = np.arange(d)
    f = np.exp(2j * np.pi * np.outer(j, j) / d) / math.sqrt(d)
    return LocalOperator(f, (d,), None, unitary=True)


def modular_add(d: int) -> LocalOperator:
    """|j,k> -> |j,(j+k) mod d> on two equal-cutoff modes.

    Built the phase-basis way: (I⊗F†) CPhase (I⊗F) with
    CPhase = sum_{j,m} e^{2 pi i jm/d} |j,m><j,m| (cross-Kerr family),
    then verified against the direct permutation matrix.
    """
    f = fock_dft(d).matrix
    j = np.arange(d)
    cphase = np.diag(np.exp(2j * np.pi * np.outer(j, j).reshape(-1) / d))
    built = np.kron(np.eye(d), f.conj().T) @ cphase @ np.kron(np.eye(d), f)

    perm = np.zeros((d * d, d * d), dtype=np.complex128)
    for jj in range(d):
        for kk in range(d):
            perm[jj * d + (jj + kk) % d, jj * d + kk] = 1.0
    dev = float(np.max(np.abs(built - perm)))
    if dev > UNITARY_TOL:
        raise OperatorError(f"modular_add construction deviates from permutation by {dev:.3e}")
    return LocalOperator(built, (d, d), ("qumode", "qumode"), unitary=True)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "i": np.eye(2, dtype=complex),
}


def pauli(axis: str) -> np.ndarray:
    return _PAULI[axis.lower()].copy()


def conditional_displacement(axis: str, param: float, which_quadrature: str, d: int) -> LocalOperator:
    """exp(-i param sigma_axis ⊗ quadrature) on (qubit, qumode).

    The universal-set trio: (Z, X), (X, X) and (Z, P).
    """
    axis = axis.lower()
    which_quadrature = which_quadrature.lower()
    if axis not in ("z", "x"):
        raise OperatorError(f"conditional displacement axis must be Z or X, got {axis!r}")
    if which_quadrature not in ("x", "p"):
        raise OperatorError(f"quadrature must be X or P, got {which_quadrature!r}")
    # |param| displaces the conjugate quadrature by param/sqrt(2) per branch
    _leakage_check(param**2 / 2, d, f"conditional_displacement(param={param})")
    xq, pq = quadratures(d)
    quad = xq.matrix if which_quadrature == "x" else pq.matrix
    h = np.kron(pauli(axis), quad)
    return LocalOperator(
        exp_i_hermitian(h, scale=param), (2, d), ("qubit", "qumode"), unitary=True
    )


def jaynes_cummings(g: float, d: int) -> LocalOperator:
    """Hermitian g(sigma+ ⊗ a + sigma- ⊗ a†) with excited state |1>.

    Conserves the excitation number sigma+sigma- ⊗ I + I ⊗ n.
    """
    a = annihilation(d).matrix
    sp = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|
    h = g * (np.kron(sp, a) + np.kron(sp.conj().T, a.conj().T))
    return LocalOperator(h, (2, d), ("qubit", "qumode"), hermitian=True)


def jc_gate(theta: float, d: int) -> LocalOperator:
    """exp(-i theta (sigma+ a + sigma- a†)): the IR-level JC interaction gate."""
    h = jaynes_cummings(1.0, d).matrix
    return LocalOperator(
        exp_i_hermitian(h, scale=theta), (2, d), ("qubit", "qumode"), unitary=True
    )


def angular_momentum(l_max: int) -> LocalOperator:
    """Rotor angular momentum: diag(-l_max .. +l_max)."""
    if l_max < 1:
        raise OperatorError("l_max must be >= 1")
    return LocalOperator(
        np.diag(np.arange(-l_max, l_max + 1, dtype=float)),
        (2 * l_max + 1,),
        ("rotor",),
        hermitian=True,
    )


def phase_displacement(theta: float, l_max: int) -> LocalOperator:
    """diag e^{i l theta}: shifts rotor phase states by theta.

    Exactly periodic: phase_displacement(2*pi) = I because the spectrum of
    the angular momentum is integer.
    """
    ls = np.arange(-l_max, l_max + 1)
    return LocalOperator(
        np.diag(np.exp(1j * theta * ls)), (2 * l_max + 1,), ("rotor",), unitary=True
    )


def rotor_ops(l_max: int) -> tuple[LocalOperator, "object"]:
    """(angular momentum operator, phase-displacement factory)."""
    return angular_momentum(l_max), lambda theta: phase_displacement(theta, l_max)


# ---------------------------------------------------------------------------
# qubit gates (IR surface)


def qubit_gate(name: str, *params: float) -> LocalOperator:
    name = name.lower()
    if name in ("x", "y", "z"):
        return LocalOperator(pauli(name), (2,), ("qubit",), hermitian=True, unitary=True)
    if name == "h":
        m = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
        return LocalOperator(m, (2,), ("qubit",), hermitian=True, unitary=True)
    if name in ("rx", "ry", "rz"):
        (theta,) = params
        return LocalOperator(
            exp_i_hermitian(pauli(name[1]), scale=theta / 2), (2,), ("qubit",), unitary=True
        )
    if name == "cx":
        m = np.eye(4, dtype=complex)
        m[2:, 2:] = pauli("x")
        return LocalOperator(m, (2, 2), ("qubit", "qubit"), unitary=True)
    raise OperatorError(f"unknown qubit gate {name!r}")


# ---------------------------------------------------------------------------
# GKP comb state preparation


def gkp_comb(d: int, spacing: float, delta: float) -> np.ndarray:
    """Finite-energy position comb in the Fock basis of one qumode.

    Normalized sum over integer s of e^{-delta²(s*spacing)²/2} times a
    squeezed peak displaced to x = s*spacing. Peak squeezing is matched to
    the envelope width (r = ln(1/delta), so peak sigma_x = delta/sqrt(2)).
    ``spacing`` is in x units; Shor wants integer spacing, code-style GKP
    uses sqrt(2 pi) — both are expressible.
    """
    if delta <= 0:
        raise OperatorError("envelope width delta must be positive")
    if spacing <= 0:
        raise OperatorError("spacing must be positive")
    r = math.log(1.0 / delta) if delta < 1 else 0.0

    # retain peaks with envelope weight down to 1e-12 of the center
    s_max = int(math.ceil(math.sqrt(2 * 12 * math.log(10)) / (delta * spacing)))
    comb = np.zeros(d, dtype=np.complex128)
    with warnings.catch_warnings():
        # the final tail-mass check owns cutoff adequacy here
        warnings.simplefilter("ignore", LeakageWarning)
        peak = squeeze(r, d).matrix[:, 0] if r > 0 else None
        for s in range(-s_max, s_max + 1):
            w = math.exp(-(delta**2) * (s * spacing) ** 2 / 2)
            if w < 1e-12:
                continue
            if s == 0:
                vec = peak if peak is not None else _vacuum_vec(d)
            else:
                alpha = s * spacing / math.sqrt(2)
                disp = displacement(alpha, d).matrix
                vec = disp[:, 0] if peak is None else disp @ peak
            comb += w * vec
    norm = np.linalg.norm(comb)
    if norm == 0:
        raise InsufficientCutoffError("comb construction produced the zero vector")
    comb /= norm
    tail = float(np.sum(np.abs(comb[-2:]) ** 2))
    if tail > 1e-6:
        raise InsufficientCutoffError(
            f"comb mass {tail:.3e} in the top two Fock levels; raise the cutoff"
        )
    return comb


def _vacuum_vec(d: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.complex128)
    v[0] = 1.0
    return v
