"""Order finding and factoring on grid-emulated CV registers.

The protocol uses three qumodes and one qubit. Qumodes 1 and 2 are
realized as dimension-``grid`` integer position registers holding
finite-energy position combs; idealizing CV position states this way makes
the multiplication gate (y -> yN) and the modular-exponentiation adder
exact permutations, confining every approximation to the comb envelope.
Qumode 3 and the qubit take no part in the gate sequence; they are carried
in the simulated state and asserted untouched at the end.

Protocol: comb ⊗ comb ⊗ vacuum ⊗ |0>, multiply register 2 by N, add
a^x mod N conditioned on register 1's position x, measure register 2 in
position (collapsing register 1 onto {x : a^x = k mod N}), measure
register 1 in momentum, and run continued fractions on the outcome.
Returned periods always satisfy a^r = 1 (mod N), verified classically.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..engine import shot_rng
from ..errors import MeasurementError, OperatorError
from ..registers import Qubit, Qumode, make_layout

DEFAULT_DELTA_GKP = 1e-3
MAX_GRID = 512


def choose_grid(n_value: int) -> int:
    """Smallest power of two >= 8*N."""
    grid = 8
    while grid < 8 * n_value:
        grid *= 2
    return grid


def comb_amplitudes(points: int, delta: float, center: float) -> np.ndarray:
    """Gaussian-envelope comb over integer positions 0..points-1."""
    s = np.arange(points, dtype=float)
    amps = np.exp(-(delta**2) * (s - center) ** 2 / 2)
    return amps / np.linalg.norm(amps)


def cvdv_shor_period(n_value: int, a: int, grid: int | None = None,
                     delta_gkp: float = DEFAULT_DELTA_GKP,
                     shots: int = 20, seed: int = 0) -> dict:
    """Find the multiplicative order r of a modulo N; returns r and
    per-retry diagnostics.

    ``grid`` must be a power of two >= 8N (chosen automatically if None).
    """
    if n_value < 3:
        raise OperatorError("N must be >= 3")
    if math.gcd(a, n_value) != 1:
        raise OperatorError(f"gcd({a}, {n_value}) != 1; order undefined")
    if grid is None:
        grid = choose_grid(n_value)
    if grid & (grid - 1) or grid < 8 * n_value:
        raise OperatorError(f"grid must be a power of two >= 8N, got {grid}")

    layout = make_layout([Qumode(grid), Qumode(grid), Qumode(2), Qubit()])

    # |psi1>: comb ⊗ comb ⊗ vacuum ⊗ |0>. Register 2's comb is windowed to
    # y < grid/N so that yN + a^x never wraps the grid (the emulation
    # analogue of the ideal protocol's infinite position line).
    y_count = grid // n_value
    comb1 = comb_amplitudes(grid, delta_gkp, (grid - 1) / 2)
    comb2 = np.zeros(grid)
    comb2[:y_count] = comb_amplitudes(y_count, delta_gkp * n_value, (y_count - 1) / 2)
    psi = np.zeros((grid, grid, 2, 2), dtype=complex)
    psi[:, :, 0, 0] = np.outer(comb1, comb2)

    # M_N: position permutation y -> yN (mod grid); exact on the grid
    mult_perm = (np.arange(grid) * n_value) % grid
    psi2 = np.zeros_like(psi)
    psi2[:, mult_perm] = psi
    psi = psi2

    # U_{a,N}: conditioned on register 1 position x, add a^x mod N to
    # register 2's position (an exact permutation per x)
    apowers = np.empty(grid, dtype=np.int64)
    apowers[0] = 1
    for x in range(1, grid):
        apowers[x] = (apowers[x - 1] * a) % n_value
    for x in range(grid):
        psi[x] = np.roll(psi[x], int(apowers[x]), axis=0)

    # untouched registers: all mass stays at (qumode3, qubit) = (0, 0)
    spectator_mass = float(np.sum(np.abs(psi[:, :, 1:, :]) ** 2)
                           + np.sum(np.abs(psi[:, :, :, 1:]) ** 2))
    assert spectator_mass == 0.0, "qumode 3 / qubit were touched by the protocol"

    register_part = psi[:, :, 0, 0]
    k_probs = np.sum(np.abs(register_part) ** 2, axis=0)
    k_probs = k_probs / k_probs.sum()

    true_r = _classical_order(a, n_value)
    attempts = []
    for retry in range(shots):
        rng = shot_rng(seed, retry)
        k = int(rng.choice(grid, p=k_probs))
        collapsed = register_part[:, k]
        nrm = np.linalg.norm(collapsed)
        if nrm <= 0:
            raise MeasurementError("collapsed onto a zero-norm branch")
        momentum_amps = np.fft.fft(collapsed / nrm, norm="ortho")
        m_probs = np.abs(momentum_amps) ** 2
        m_probs = m_probs / m_probs.sum()
        m = int(rng.choice(grid, p=m_probs))
        candidate = _period_from_measurement(m, grid, a, n_value)
        attempts.append({"k": k, "m": m, "candidate": candidate})
        if candidate is not None:
            assert pow(a, candidate, n_value) == 1
            return {
                "r": candidate,
                "N": n_value,
                "a": a,
                "grid": grid,
                "total_dim": layout.total_dim,
                "retries": retry + 1,
                "attempts": attempts,
                "classical_order": true_r,
            }
    raise MeasurementError(
        f"no valid period found for a={a}, N={n_value} within {shots} retries"
    )


def _period_from_measurement(m: int, grid: int, a: int, n_value: int) -> int | None:
    """Continued-fraction postprocessing of a momentum outcome m/grid."""
    if m == 0:
        return None
    best = None
    for denom_cap in range(2, n_value + 1):
        frac = Fraction(m, grid).limit_denominator(denom_cap)
        d = frac.denominator
        # the measured fraction may expose only a divisor of r
        mult = d
        while mult < n_value:
            if pow(a, mult, n_value) == 1:
                if best is None or mult < best:
                    best = mult
                break
            mult += d
    return best


def _classical_order(a: int, n_value: int) -> int:
    r, value = 1, a % n_value
    while value != 1:
        value = (value * a) % n_value
        r += 1
    return r


def _is_prime(n_value: int) -> bool:
    if n_value < 2:
        return False
    f = 2
    while f * f <= n_value:
        if n_value % f == 0:
            return False
        f += 1
    return True


def _is_prime_power(n_value: int) -> bool:
    for b in range(2, n_value.bit_length() + 1):
        root = round(n_value ** (1.0 / b))
        for cand in (root - 1, root, root + 1):
            if cand >= 2 and cand**b == n_value:
                return True
    return False


def shor_factor(n_value: int, shots: int = 20, seed: int = 0) -> dict:
    """Split an odd composite non-prime-power N into a nontrivial factor pair.

    Classically pre-checks the preconditions, then repeats order finding
    with random bases until an even order r with a^{r/2} != -1 (mod N)
    yields gcd(a^{r/2} ± 1, N).
    """
    if n_value % 2 == 0 or n_value < 9:
        raise OperatorError("N must be an odd composite >= 9")
    if _is_prime(n_value):
        raise OperatorError(f"{n_value} is prime")
    if _is_prime_power(n_value):
        raise OperatorError(f"{n_value} is a prime power; use classical root extraction")

    rng = shot_rng(seed, 0)
    tried = []
    for attempt in range(shots):
        a = int(rng.integers(2, n_value - 1))
        g = math.gcd(a, n_value)
        if g > 1:
            factors = sorted((g, n_value // g))
            return {"N": n_value, "factors": factors, "a": a, "lucky_gcd": True,
                    "attempts": tried + [a]}
        tried.append(a)
        report = cvdv_shor_period(n_value, a, shots=shots, seed=seed + 1000 + attempt)
        r = report["r"]
        if r % 2 != 0:
            continue
        y = pow(a, r // 2, n_value)
        if y == n_value - 1:
            continue
        f1, f2 = math.gcd(y - 1, n_value), math.gcd(y + 1, n_value)
        for f in (f1, f2):
            if 1 < f < n_value:
                factors = sorted((f, n_value // f))
                return {"N": n_value, "factors": factors, "a": a, "r": r,
                        "lucky_gcd": False, "attempts": tried}
    raise MeasurementError(f"failed to factor {n_value} within {shots} attempts")
