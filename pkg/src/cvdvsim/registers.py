"""Mixed qubit/qumode/rotor register layouts and the dense hybrid statevector.

Index convention: mode 0 is the most significant digit of the mixed-radix
index (row-major), so for a layout ``[A, B, C]`` the flat index of
coordinates ``(a, b, c)`` is ``a*dim(B)*dim(C) + b*dim(C) + c``.

Rotor convention (artifact choice, the underlying physics fixes neither a
basis ordering nor a ground state): angular momentum levels are stored in
order ``l = -l_max .. +l_max``, so index 0 holds ``l = -l_max``.
``init_vacuum`` therefore places rotors in ``|l=-l_max>``; algorithm code
that needs a phase state prepares it explicitly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, LayoutMismatchError, ModeIndexError

DEFAULT_MEM_CEILING_BYTES = 4 * 1024**3
BYTES_PER_AMPLITUDE = 16  # double-precision complex

MEM_CEILING_ENV_VAR = "HCIR_MEM_CEILING_BYTES"


def mem_ceiling_bytes() -> int:
    """Active memory ceiling; overridable via HCIR_MEM_CEILING_BYTES."""
    raw = os.environ.get(MEM_CEILING_ENV_VAR)
    if raw is not None:
        return int(raw)
    return DEFAULT_MEM_CEILING_BYTES


@dataclass(frozen=True)
class Qubit:
    kind = "qubit"

    @property
    def dim(self) -> int:
        return 2

    def __repr__(self):
        return "Qubit()"


@dataclass(frozen=True)
class Qumode:
    cutoff: int
    kind = "qumode"

    def __post_init__(self):
        if self.cutoff < 2:
            raise ModeIndexError(f"qumode cutoff must be >= 2, got {self.cutoff}")

    @property
    def dim(self) -> int:
        return self.cutoff


@dataclass(frozen=True)
class Rotor:
    l_max: int
    kind = "rotor"

    def __post_init__(self):
        if self.l_max < 1:
            raise ModeIndexError(f"rotor l_max must be >= 1, got {self.l_max}")

    @property
    def dim(self) -> int:
        return 2 * self.l_max + 1


ModeKind = Qubit | Qumode | Rotor


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered mode descriptors defining a mixed-radix product space.

    Immutable and freely shareable across threads.
    """

    modes: tuple[ModeKind, ...]
    total_dim: int = field(init=False, compare=False)

    def __post_init__(self):
        if not self.modes:
            raise ModeIndexError("layout needs at least one mode")
        dim = 1
        for m in self.modes:
            dim *= m.dim  # Python ints never overflow
        object.__setattr__(self, "total_dim", dim)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.dim for m in self.modes)

    @property
    def n_modes(self) -> int:
        return len(self.modes)


def make_layout(modes: list[ModeKind], enforce_ceiling: bool = True) -> RegisterLayout:
    """Build a layout, failing fast if the state would not fit in memory.

    ``enforce_ceiling=False`` skips the capacity check; the IR parser uses
    this so resource estimation works on layouts far beyond simulable size.
    The engine re-checks the ceiling before allocating any state.
    """
    layout = RegisterLayout(tuple(modes))
    if enforce_ceiling:
        ensure_capacity(layout)
    return layout


def ensure_capacity(layout: RegisterLayout, bytes_per_amplitude: int = BYTES_PER_AMPLITUDE):
    required = layout.total_dim * bytes_per_amplitude
    allowed = mem_ceiling_bytes()
    if required > allowed:
        raise CapacityError(required, allowed)


def memory_estimate(layout: RegisterLayout, bytes_per_amplitude: int = BYTES_PER_AMPLITUDE) -> int:
    """Bytes needed to store one dense statevector over ``layout``."""
    return layout.total_dim * bytes_per_amplitude


def _coord_to_internal(mode: ModeKind, c: int) -> int:
    """Map a user coordinate to a storage index (rotors offset by +l_max)."""
    if isinstance(mode, Rotor):
        c = c + mode.l_max
    return c


def _coord_from_internal(mode: ModeKind, c: int) -> int:
    if isinstance(mode, Rotor):
        return c - mode.l_max
    return c


def index_of(layout: RegisterLayout, coords) -> int:
    """Flat mixed-radix index of per-mode coordinates (mode 0 most significant)."""
    if len(coords) != layout.n_modes:
        raise ModeIndexError(
            f"expected {layout.n_modes} coordinates, got {len(coords)}"
        )
    idx = 0
    for i, (mode, c) in enumerate(zip(layout.modes, coords)):
        ci = _coord_to_internal(mode, c)
        if not 0 <= ci < mode.dim:
            raise ModeIndexError(
                f"coordinate {c} out of range for mode {i} ({mode!r})"
            )
        idx = idx * mode.dim + ci
    return idx


def coords_of(layout: RegisterLayout, index: int) -> tuple[int, ...]:
    """Exact inverse of :func:`index_of`."""
    if not 0 <= index < layout.total_dim:
        raise ModeIndexError(f"index {index} out of range [0, {layout.total_dim})")
    out = []
    for mode in reversed(layout.modes):
        index, ci = divmod(index, mode.dim)
        out.append(_coord_from_internal(mode, ci))
    return tuple(reversed(out))


class HybridState:
    """Dense complex statevector over a layout's product space.

    ``squared_norm`` is tracked explicitly: it stays ~1 through unitary
    gates and records the branch probability after post-selection, where
    amplitudes remain unnormalized until :meth:`normalize` is called.

    A state is exclusively owned by one executor at a time; see the engine
    for the concurrency contract.
    """

    def __init__(self, layout: RegisterLayout, amplitudes: np.ndarray, squared_norm: float | None = None):
        if amplitudes.shape != (layout.total_dim,):
            raise LayoutMismatchError(
                f"amplitude vector length {amplitudes.shape} does not match "
                f"layout dimension {layout.total_dim}"
            )
        self.layout = layout
        self.amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        if squared_norm is None:
            squared_norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        self.squared_norm = squared_norm

    def copy(self) -> "HybridState":
        return HybridState(self.layout, self.amplitudes.copy(), self.squared_norm)

    def refresh_norm(self) -> float:
        self.squared_norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        return self.squared_norm

    def normalize(self) -> "HybridState":
        n2 = self.refresh_norm()
        if n2 <= 0.0:
            raise LayoutMismatchError("cannot normalize a zero state")
        self.amplitudes /= math.sqrt(n2)
        self.squared_norm = 1.0
        return self

    def tensor(self) -> np.ndarray:
        """View of the amplitudes shaped as the per-mode tensor."""
        return self.amplitudes.reshape(self.layout.dims)

    def amplitude(self, coords) -> complex:
        return complex(self.amplitudes[index_of(self.layout, coords)])


def init_vacuum(layout: RegisterLayout) -> HybridState:
    """All-zero product state: qubits |0>, qumodes |n=0>, rotors |l=-l_max>."""
    ensure_capacity(layout)
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    amps[0] = 1.0
    return HybridState(layout, amps, squared_norm=1.0)


def basis_state(layout: RegisterLayout, coords) -> HybridState:
    """Product basis state at the given per-mode coordinates."""
    ensure_capacity(layout)
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    amps[index_of(layout, coords)] = 1.0
    return HybridState(layout, amps, squared_norm=1.0)


def inner_product(a: HybridState, b: HybridState) -> complex:
    """<a|b> with conjugation on ``a``. Layouts must be identical."""
    if a.layout != b.layout:
        raise LayoutMismatchError("inner product requires identical layouts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
