"""Weighted sums of products of mode-local operators, plus model builders.

A :class:`HamiltonianExpr` is a list of terms ``coeff * F_1 F_2 ...`` where
each factor acts on a distinct mode. Expressions are immutable; builders
are pure functions returning an expression and (usually) the layout it was
built for.

Fermions are mapped to qubits with the Jordan-Wigner encoding; ordering is
site-major (spin-minor when a spin index is present) so hopping signs are
reproducible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .errors import HermiticityError, OperatorError, UnsupportedTermError
from .operators import LocalOperator, annihilation, number, pauli, quadratures
from .registers import Qubit, Qumode, RegisterLayout, make_layout

_ID_TOL = 1e-15


@dataclass(frozen=True)
class Term:
    coeff: complex
    factors: tuple[tuple[int, LocalOperator], ...]

    def __post_init__(self):
        modes = [m for m, _ in self.factors]
        if len(set(modes)) != len(modes):
            raise OperatorError("factors within a term must act on distinct modes")
        for _, op in self.factors:
            if op.arity != 1:
                raise OperatorError("term factors must be single-mode operators")

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.factors)

    def dagger(self) -> "Term":
        return Term(
            np.conj(self.coeff),
            tuple((m, op.dagger()) for m, op in self.factors),
        )


class HamiltonianExpr:
    """Immutable weighted sum of factor products."""

    def __init__(self, terms: Sequence[Term] = ()):
        cleaned = []
        for t in terms:
            if t.coeff == 0:
                continue
            factors = []
            for m, op in sorted(t.factors, key=lambda f: f[0]):
                d = op.dims[0]
                if np.max(np.abs(op.matrix - np.eye(d))) <= _ID_TOL:
                    continue  # identity factors carry no information
                factors.append((m, op))
            cleaned.append(Term(t.coeff, tuple(factors)))
        self.terms = tuple(cleaned)

    def __add__(self, other: "HamiltonianExpr") -> "HamiltonianExpr":
        return HamiltonianExpr(self.terms + other.terms)

    def __sub__(self, other: "HamiltonianExpr") -> "HamiltonianExpr":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "HamiltonianExpr":
        return HamiltonianExpr([Term(t.coeff * scalar, t.factors) for t in self.terms])

    __rmul__ = __mul__

    def dagger(self) -> "HamiltonianExpr":
        return HamiltonianExpr([t.dagger() for t in self.terms])

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def max_mode(self) -> int:
        return max((max(t.modes) for t in self.terms if t.modes), default=-1)

    def grouped_blocks(self) -> list[tuple[tuple[int, ...], np.ndarray]]:
        """Terms merged by mode set into dense blocks, first-appearance order.

        Identity-free factor products sharing the same mode set are summed,
        so Hermitian-conjugate pairs (hoppings, JC couplings) land in one
        block. Blocks wider than 3 modes are rejected.
        """
        order: list[tuple[int, ...]] = []
        blocks: dict[tuple[int, ...], np.ndarray] = {}
        for t in self.terms:
            modes = t.modes
            if len(modes) > 3:
                raise UnsupportedTermError(
                    f"term spans {len(modes)} modes; the engine exponentiates "
                    "at most 3-mode blocks"
                )
            if not modes:
                modes = ()  # constant term
            mats = [op.matrix for _, op in t.factors]
            block = t.coeff * (reduce(np.kron, mats) if mats else np.array([[1.0]]))
            if modes not in blocks:
                order.append(modes)
                blocks[modes] = block.astype(np.complex128)
            else:
                blocks[modes] = blocks[modes] + block
        return [(m, blocks[m]) for m in order]

    def hermiticity_residual(self) -> float:
        """max-norm of (H - H†) computed blockwise.

        Exact for expressions whose identity components do not cancel across
        different mode sets, which covers every builder in this module.
        """
        res = 0.0
        for _, block in self.grouped_blocks():
            res = max(res, float(np.max(np.abs(block - block.conj().T))))
        return res

    def require_hermitian(self, tol: float = 1e-10):
        res = self.hermiticity_residual()
        if res > tol:
            raise HermiticityError(f"expression is not Hermitian (residual {res:.3e})")

    def to_dense(self, layout: RegisterLayout) -> np.ndarray:
        """Full-space matrix; intended for oracle-scale layouts only."""
        dims = layout.dims
        total = layout.total_dim
        out = np.zeros((total, total), dtype=np.complex128)
        for t in self.terms:
            per_mode = {m: op.matrix for m, op in t.factors}
            mats = [per_mode.get(i, np.eye(d)) for i, d in enumerate(dims)]
            out += t.coeff * reduce(np.kron, mats)
        return out


def term(coeff, *factors: tuple[int, LocalOperator]) -> HamiltonianExpr:
    return HamiltonianExpr([Term(complex(coeff), tuple(factors))])


def _op(matrix: np.ndarray, kind: str | None = None, hermitian: bool = False) -> LocalOperator:
    return LocalOperator(matrix, (matrix.shape[0],), (kind,), hermitian=hermitian)


# ---------------------------------------------------------------------------
# Jordan-Wigner


_SP = np.array([[0, 0], [1, 0]], dtype=complex)  # creation on a qubit, |1><0|
_SM = _SP.conj().T


def jordan_wigner(ops: Sequence[tuple[str, int]], n_sites: int) -> list[tuple[int, np.ndarray]]:
    """Map a product of fermionic ladder operators to qubit factors.

    ``ops`` lists ("+", site) for creation and ("-", site) for annihilation,
    leftmost operator first. Returns (qubit, 2x2 matrix) factors with
    identity qubits dropped. Raises on products that vanish identically
    (repeated-site normal-ordering violations such as c†c†).
    """
    acc: dict[int, np.ndarray] = {}
    z = pauli("z")
    for kind, site in ops:
        if not 0 <= site < n_sites:
            raise OperatorError(f"fermionic site {site} out of range [0, {n_sites})")
        if kind not in ("+", "-"):
            raise OperatorError(f"fermionic operator must be '+' or '-', got {kind!r}")
        for q in range(site):
            acc[q] = acc.get(q, np.eye(2, dtype=complex)) @ z
        ladder = _SP if kind == "+" else _SM
        acc[site] = acc.get(site, np.eye(2, dtype=complex)) @ ladder
    factors = []
    for q in sorted(acc):
        m = acc[q]
        if np.max(np.abs(m)) < _ID_TOL:
            raise OperatorError(
                "fermionic product vanishes (repeated-site normal-ordering violation)"
            )
        if np.max(np.abs(m - np.eye(2))) <= _ID_TOL:
            continue
        factors.append((q, m))
    return factors


def _jw_term(coeff, ops: Sequence[tuple[str, int]], n_sites: int) -> HamiltonianExpr:
    factors = tuple(
        (q, _op(m, "qubit")) for q, m in jordan_wigner(ops, n_sites)
    )
    return HamiltonianExpr([Term(complex(coeff), factors)])


def _as_list(value, n, name) -> list[float]:
    if np.isscalar(value):
        return [float(value)] * n
    value = list(value)
    if len(value) != n:
        raise OperatorError(f"{name} must be a scalar or a length-{n} sequence")
    return [float(v) for v in value]


# ---------------------------------------------------------------------------
# model builders


def build_tavis_cummings(n_sites: int, n_modes: int, eps, h, omega, g,
                         cutoffs) -> tuple[HamiltonianExpr, RegisterLayout]:
    """Generalized Tavis-Cummings: fermion sites (JW qubits) coupled to
    bosonic modes through g * sum_(i,k) (c†_i a_k + h.c.).

    Layout: qubits 0..n_sites-1, then qumodes.
    """
    eps = _as_list(eps, n_sites, "eps")
    omega = _as_list(omega, n_modes, "omega")
    cutoffs = [int(c) for c in _as_list(cutoffs, n_modes, "cutoffs")]
    if any(c < 2 for c in cutoffs):
        raise OperatorError("all cutoffs must be >= 2")
    h = np.zeros((n_sites, n_sites)) if h is None else np.asarray(h, dtype=complex)

    expr = HamiltonianExpr()
    for i in range(n_sites):
        expr = expr + _jw_term(eps[i], [("+", i), ("-", i)], n_sites)
    for i in range(n_sites):
        for j in range(n_sites):
            if i != j and h[i, j] != 0:
                expr = expr + _jw_term(h[i, j], [("+", i), ("-", j)], n_sites)
    for k in range(n_modes):
        mode = n_sites + k
        expr = expr + term(omega[k], (mode, number(cutoffs[k])))
    for i in range(n_sites):
        for k in range(n_modes):
            mode = n_sites + k
            a = annihilation(cutoffs[k])
            up = HamiltonianExpr([
                Term(complex(g), tuple(
                    [(q, _op(m, "qubit")) for q, m in jordan_wigner([("+", i)], n_sites)]
                    + [(mode, a)]
                ))
            ])
            expr = expr + up + up.dagger()
    layout = make_layout([Qubit()] * n_sites + [Qumode(c) for c in cutoffs],
                         enforce_ceiling=False)
    return expr, layout


@dataclass
class SpinBosonSpec:
    """Spin-boson model parameters.

    The bath is given either explicitly as (omega_k, g_k) pairs, or through
    a spectral density J(omega) discretized on a linear grid over
    (0, omega_max] with g_k² = J(omega_k) * d_omega / pi.
    """

    epsilon: Sequence[float]
    delta: Sequence[float]
    couplings: dict | None = None          # {(i, j): J_ij} with i < j
    bath: Sequence[tuple[float, float]] | None = None
    spectral_density: Callable[[float], float] | None = None
    n_bath: int = 0
    omega_max: float = 0.0

    def bath_modes(self) -> list[tuple[float, float]]:
        if self.bath is not None:
            modes = [(float(w), float(g)) for w, g in self.bath]
        else:
            if self.spectral_density is None or self.n_bath < 1 or self.omega_max <= 0:
                raise OperatorError(
                    "bath must be explicit or given as (spectral_density, n_bath, omega_max)"
                )
            dw = self.omega_max / self.n_bath
            modes = []
            for k in range(self.n_bath):
                w = (k + 1) * dw
                jw = float(self.spectral_density(w))
                if jw < 0:
                    raise OperatorError("spectral density must be nonnegative")
                modes.append((w, math.sqrt(jw * dw / math.pi)))
            self._check_discretization(dw, modes)
        if any(w <= 0 for w, _ in modes):
            raise OperatorError("all bath frequencies must be positive")
        return modes

    def _check_discretization(self, dw: float, modes: list[tuple[float, float]]):
        # faithful quadrature check: sum pi g_k^2 vs a 10x finer trapezoid
        discrete = sum(math.pi * g * g for _, g in modes)
        fine = np.linspace(0.0, self.omega_max, 10 * self.n_bath + 1)
        reference = float(np.trapezoid([self.spectral_density(w) for w in fine], fine))
        if reference > 0 and abs(discrete - reference) > 0.02 * reference:
            raise OperatorError(
                f"bath discretization integrates J to {discrete:.6g} but the "
                f"trapezoid reference is {reference:.6g} (>2% off); increase n_bath"
            )


def build_spin_boson(spec: SpinBosonSpec, cutoffs) -> tuple[HamiltonianExpr, RegisterLayout]:
    """H_S + H_B + H_SB with sigma_z (b† + b) coupling.

    Layout: spin qubits first, then one qumode per bath mode.
    """
    n = len(spec.epsilon)
    if len(spec.delta) != n:
        raise OperatorError("epsilon and delta must have equal length")
    bath = spec.bath_modes()
    cutoffs = [int(c) for c in _as_list(cutoffs, len(bath), "cutoffs")]

    expr = HamiltonianExpr()
    for i in range(n):
        if spec.epsilon[i] != 0:
            expr = expr + term(spec.epsilon[i] / 2, (i, _op(pauli("z"), "qubit", hermitian=True)))
        if spec.delta[i] != 0:
            expr = expr + term(spec.delta[i] / 2, (i, _op(pauli("x"), "qubit", hermitian=True)))
    for (i, j), jij in (spec.couplings or {}).items():
        if not (0 <= i < j < n):
            raise OperatorError(f"coupling key {(i, j)} must satisfy 0 <= i < j < n")
        expr = expr + term(jij,
                           (i, _op(pauli("z"), "qubit", hermitian=True)),
                           (j, _op(pauli("z"), "qubit", hermitian=True)))
    for k, (w, g) in enumerate(bath):
        mode = n + k
        d = cutoffs[k]
        expr = expr + term(w, (mode, number(d)))
        a = annihilation(d).matrix
        xop = _op(a + a.conj().T, "qumode", hermitian=True)
        for i in range(n):
            expr = expr + term(g, (i, _op(pauli("z"), "qubit", hermitian=True)), (mode, xop))
    layout = make_layout([Qubit()] * n + [Qumode(c) for c in cutoffs],
                         enforce_ceiling=False)
    return expr, layout


def build_bose_hubbard(L_sites: int, J: float, U: float, mu: float, sign: str,
                       cutoff: int, boundary: str = "open") -> tuple[HamiltonianExpr, RegisterLayout]:
    """-J sum_j (a_j a†_{j+1} + h.c.) ± U/2 sum_j n_j(n_j - 1) - mu sum_j n_j.

    ``sign`` selects the attractive ("attractive", -U/2) or repulsive
    ("repulsive", +U/2) on-site term. Invariant under the global U(1)
    phase, i.e. [H, N_total] = 0.
    """
    if L_sites < 2:
        raise OperatorError("Bose-Hubbard needs at least 2 sites")
    if cutoff < 2:
        raise OperatorError("cutoff must be >= 2")
    if sign not in ("attractive", "repulsive"):
        raise OperatorError("sign must be 'attractive' or 'repulsive'")
    if boundary not in ("open", "periodic"):
        raise OperatorError("boundary must be 'open' or 'periodic'")
    u_sign = -1.0 if sign == "attractive" else 1.0

    a = annihilation(cutoff)
    adag = a.dagger()
    nmat = number(cutoff).matrix
    onsite = _op(u_sign * (U / 2) * (nmat @ nmat - nmat) - mu * nmat, "qumode", hermitian=True)

    expr = HamiltonianExpr()
    bonds = [(j, j + 1) for j in range(L_sites - 1)]
    if boundary == "periodic" and L_sites > 2:
        bonds.append((L_sites - 1, 0))
    for j, k in bonds:
        expr = expr + term(-J, (j, a), (k, adag)) + term(-J, (j, adag), (k, a))
    for j in range(L_sites):
        if U != 0 or mu != 0:
            expr = expr + term(1.0, (j, onsite))
    layout = make_layout([Qumode(cutoff)] * L_sites, enforce_ceiling=False)
    return expr, layout


def electron_phonon_layout(n_sites: int, cutoff: int) -> RegisterLayout:
    """Qubit per site followed by one oscillator per site."""
    return make_layout([Qubit()] * n_sites + [Qumode(cutoff)] * n_sites,
                       enforce_ceiling=False)


def build_holstein(g: float, n_sites: int, cutoff: int) -> HamiltonianExpr:
    """g sum_i (b†_i + b_i) c†_i c_i over the electron-phonon layout."""
    if g == 0:
        return HamiltonianExpr()
    a = annihilation(cutoff).matrix
    xop = _op(a + a.conj().T, "qumode", hermitian=True)
    expr = HamiltonianExpr()
    for i in range(n_sites):
        nf = jordan_wigner([("+", i), ("-", i)], n_sites)
        factors = tuple([(q, _op(m, "qubit")) for q, m in nf] + [(n_sites + i, xop)])
        expr = expr + HamiltonianExpr([Term(complex(g), factors)])
    return expr


def build_peierls(g: float, bonds: Sequence[tuple[int, int]], n_sites: int,
                  cutoff: int) -> HamiltonianExpr:
    """g sum_<i,j> (dX_j - dX_i)(c†_j c_i + c†_i c_j): bond-modulated hopping."""
    if g == 0:
        return HamiltonianExpr()
    a = annihilation(cutoff).matrix
    xmat = a + a.conj().T
    expr = HamiltonianExpr()
    for i, j in bonds:
        if not (0 <= i < n_sites and 0 <= j < n_sites and i != j):
            raise OperatorError(f"bond {(i, j)} does not match {n_sites} sites")
        for hop in ([("+", j), ("-", i)], [("+", i), ("-", j)]):
            fermi = [(q, _op(m, "qubit")) for q, m in jordan_wigner(hop, n_sites)]
            for site, s in ((j, 1.0), (i, -1.0)):
                factors = tuple(fermi + [(n_sites + site, _op(xmat, "qumode", hermitian=True))])
                expr = expr + HamiltonianExpr([Term(complex(g * s), factors)])
    return expr


def build_ivr_cubic(phi: dict[tuple[int, int, int], float], n_modes: int,
                    cutoff: int) -> HamiltonianExpr:
    """sum over distinct (j,k,l) of Phi_jkl (b†+b)_j (b†+b)_k (b†+b)_l.

    Coefficients are stored symmetrically: (j,k,l) is canonicalized to the
    sorted triple, and duplicate entries for the same triple accumulate.
    """
    a = annihilation(cutoff).matrix
    xop = _op(a + a.conj().T, "qumode", hermitian=True)
    canon: dict[tuple[int, int, int], float] = {}
    for (j, k, l), value in phi.items():
        if len({j, k, l}) != 3:
            raise OperatorError(f"IVR coefficient indices must be distinct, got {(j, k, l)}")
        if not all(0 <= m < n_modes for m in (j, k, l)):
            raise OperatorError(f"IVR index out of range in {(j, k, l)}")
        key = tuple(sorted((j, k, l)))
        canon[key] = canon.get(key, 0.0) + float(value)
    expr = HamiltonianExpr()
    for (j, k, l), value in sorted(canon.items()):
        expr = expr + term(value, (j, xop), (k, xop), (l, xop))
    return expr


def build_lvc_two_mode(delta: float, kappa_g: float, lambda_h: float,
                       omega_g: float, omega_h: float,
                       cutoffs: tuple[int, int]) -> tuple[HamiltonianExpr, RegisterLayout]:
    """Two-state, two-mode linear vibronic coupling Hamiltonian.

    (P_g² + P_h²)/2 + (Omega_g² Q_g² + Omega_h² Q_h²)/2
    + (Delta + kappa_g Q_g) sigma_z + lambda_h Q_h sigma_x,
    with the diabatic states on the qubit and Q, P the x/p quadratures of
    the two qumodes (tuning mode first).
    """
    if omega_g <= 0 or omega_h <= 0:
        raise OperatorError("mode frequencies must be positive")
    cg, ch = int(cutoffs[0]), int(cutoffs[1])
    expr = HamiltonianExpr()
    for mode, d, omega in ((1, cg, omega_g), (2, ch, omega_h)):
        x, p = quadratures(d)
        expr = expr + term(0.5, (mode, _op(p.matrix @ p.matrix, "qumode", hermitian=True)))
        expr = expr + term(0.5 * omega**2, (mode, _op(x.matrix @ x.matrix, "qumode", hermitian=True)))
    if delta != 0:
        expr = expr + term(delta, (0, _op(pauli("z"), "qubit", hermitian=True)))
    if kappa_g != 0:
        xg, _ = quadratures(cg)
        expr = expr + term(kappa_g, (0, _op(pauli("z"), "qubit", hermitian=True)), (1, xg))
    if lambda_h != 0:
        xh, _ = quadratures(ch)
        expr = expr + term(lambda_h, (0, _op(pauli("x"), "qubit", hermitian=True)), (2, xh))
    layout = make_layout([Qubit(), Qumode(cg), Qumode(ch)], enforce_ceiling=False)
    return expr, layout


def build_qhd(V, W, n_modes: int, cutoff: int) -> Callable[[float], HamiltonianExpr]:
    """Time-dependent optimization Hamiltonian builder.

    builder(t) = sum_k p_k²/(2(1+t²)) + sum_jk V_jk x_j x_k
                 + sum_jklm W_jklm x_j x_k x_l x_m

    The effective mass mu(t) = 1 + t² suppresses the kinetic term at late
    times. Emits a warning when the classical potential looks unbounded
    below on sampled directions.
    """
    V = np.zeros((n_modes, n_modes)) if V is None else np.asarray(V, dtype=float)
    if V.shape != (n_modes, n_modes):
        raise OperatorError(f"V must be {n_modes}x{n_modes}")
    if W is None:
        W = {}
    if isinstance(W, np.ndarray):
        W = {idx: float(W[idx]) for idx in np.ndindex(W.shape) if W[idx] != 0}
    wcanon: dict[tuple[int, ...], float] = {}
    for idx, value in W.items():
        if len(idx) != 4 or not all(0 <= m < n_modes for m in idx):
            raise OperatorError(f"W index {idx} invalid for {n_modes} modes")
        key = tuple(sorted(idx))
        wcanon[key] = wcanon.get(key, 0.0) + float(value)

    _warn_if_unbounded(V, wcanon, n_modes)

    x, p = quadratures(cutoff)
    p2 = _op(p.matrix @ p.matrix, "qumode", hermitian=True)

    def power_factors(powers: dict[int, int]) -> tuple[tuple[int, LocalOperator], ...]:
        facs = []
        for mode, k in sorted(powers.items()):
            m = np.linalg.matrix_power(x.matrix, k)
            facs.append((mode, _op(m, "qumode", hermitian=True)))
        return tuple(facs)

    static_terms = []
    for j in range(n_modes):
        for k in range(n_modes):
            if V[j, k] != 0:
                powers: dict[int, int] = {}
                for m in (j, k):
                    powers[m] = powers.get(m, 0) + 1
                static_terms.append(Term(complex(V[j, k]), power_factors(powers)))
    for idx, value in sorted(wcanon.items()):
        if value != 0:
            powers = {}
            for m in idx:
                powers[m] = powers.get(m, 0) + 1
            static_terms.append(Term(complex(value), power_factors(powers)))
    potential = HamiltonianExpr(static_terms)

    def builder(t: float) -> HamiltonianExpr:
        coeff = 1.0 / (2.0 * (1.0 + t * t))
        kinetic = HamiltonianExpr([Term(complex(coeff), ((k, p2),)) for k in range(n_modes)])
        return kinetic + potential

    return builder


def _warn_if_unbounded(V: np.ndarray, wcanon: dict, n_modes: int, n_dirs: int = 200):
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(n_dirs, n_modes))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for i in range(n_modes):  # include coordinate axes
        e = np.zeros(n_modes)
        e[i] = 1.0
        dirs = np.vstack([dirs, e, -e])
    for u in dirs:
        q4 = sum(v * u[a] * u[b] * u[c] * u[d] for (a, b, c, d), v in wcanon.items())
        if q4 < -1e-12 or (abs(q4) <= 1e-12 and float(u @ V @ u) < -1e-12):
            warnings.warn(
                "QHD potential appears unbounded below on the truncated space",
                stacklevel=3,
            )
            return
