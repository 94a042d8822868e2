"""Typed textual circuit format: parser, static validator, serializer,
and resource counter.

Grammar (line oriented, semicolon terminated, declarations before use):

    program := (decl | instr)*
    decl    := ("qubit" | "qumode[" int "]" | "rotor[" int "]") ident ";"
    instr   := gatename ident+ number* ";"
             | "measure" ident ("z" | "fock" | "homodyne" number) ";"
             | "reset" ident ";"
             | "barrier" ";"

Homodyne angle 0 measures x, pi/2 measures p. The rotor declaration
"rotor[l_max] r;" extends the qubit/qumode surface. Files use extension
".hcir". Canonical serialization is one instruction per line with numbers
printed at 17 significant digits. No classical control flow: mid-circuit
measurement results are recorded, not branched on.

Parser and validator are pure and reentrant.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import CircuitTypeError, ParseError
from .operators import (
    LocalOperator,
    conditional_displacement,
    displacement,
    fock_dft,
    jc_gate,
    kerr,
    cross_kerr,
    modular_add,
    beamsplitter,
    phase_displacement,
    phase_rotation,
    qubit_gate,
    squeeze,
)
from .registers import (
    BYTES_PER_AMPLITUDE,
    Qubit,
    Qumode,
    RegisterLayout,
    Rotor,
    make_layout,
    memory_estimate,
)

QUMODE_OR_ROTOR = ("qumode", "rotor")


@dataclass(frozen=True)
class GateDef:
    n_targets: int
    kinds: tuple[tuple[str, ...], ...]  # allowed kinds per target slot
    n_params: int


GATE_TABLE: dict[str, GateDef] = {
    "dgate": GateDef(1, (("qumode",),), 2),
    "sq": GateDef(1, (("qumode",),), 2),
    "bs": GateDef(2, (("qumode",), ("qumode",)), 2),
    "rot": GateDef(1, (QUMODE_OR_ROTOR,), 1),
    "kerr": GateDef(1, (("qumode",),), 1),
    "xkerr": GateDef(2, (("qumode",), ("qumode",)), 1),
    "cdx": GateDef(2, (("qubit",), ("qumode",)), 1),
    "cdp": GateDef(2, (("qubit",), ("qumode",)), 1),
    "cdxx": GateDef(2, (("qubit",), ("qumode",)), 1),
    "jc": GateDef(2, (("qubit",), ("qumode",)), 1),
    "dft": GateDef(1, (QUMODE_OR_ROTOR,), 0),
    "modadd": GateDef(2, (("qumode",), ("qumode",)), 0),
    "h": GateDef(1, (("qubit",),), 0),
    "x": GateDef(1, (("qubit",),), 0),
    "y": GateDef(1, (("qubit",),), 0),
    "z": GateDef(1, (("qubit",),), 0),
    "rx": GateDef(1, (("qubit",),), 1),
    "ry": GateDef(1, (("qubit",),), 1),
    "rz": GateDef(1, (("qubit",),), 1),
    "cx": GateDef(2, (("qubit",), ("qubit",)), 0),
}

_RESERVED = set(GATE_TABLE) | {
    "qubit", "qumode", "rotor", "measure", "reset", "barrier",
    "fock", "homodyne",
}


@dataclass(frozen=True)
class GateInstr:
    name: str
    targets: tuple[int, ...]
    params: tuple[float, ...]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class MeasureInstr:
    mode: int
    basis: str  # "z" | "fock" | "homodyne"
    angle: float = 0.0
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ResetInstr:
    mode: int
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Barrier:
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


Instruction = GateInstr | MeasureInstr | ResetInstr | Barrier


@dataclass(frozen=True)
class Circuit:
    """Validated instruction sequence over a declared layout.

    Mode references are integer indices into the layout; ``mode_names``
    preserves declaration names for serialization.
    """

    layout: RegisterLayout
    mode_names: tuple[str, ...]
    instructions: tuple[Instruction, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.mode_names) != self.layout.n_modes:
            raise CircuitTypeError("one name per layout mode required")

    def measured_value(self, mode: int, level: int):
        """Map an internal basis level to the reported measurement value."""
        m = self.layout.modes[mode]
        if isinstance(m, Rotor):
            return level - m.l_max
        return level


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}: {self.severity}: {self.message}"


# ---------------------------------------------------------------------------
# lexer


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<lbracket>\[)
      | (?P<rbracket>\])
      | (?P<semi>;)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[Token]:
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if m is None:
                raise ParseError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
            kind = m.lastgroup
            if kind != "ws":
                tokens.append(Token(kind, m.group(), lineno, m.start() + 1))
            pos = m.end()
    return tokens


class _TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> Token | None:
        tok = self.peek()
        if tok is not None:
            self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.next()
        if tok is None:
            last = self.tokens[-1] if self.tokens else Token("", "", 1, 1)
            raise ParseError(f"expected {what} but input ended", last.line, last.col)
        if tok.kind != kind:
            raise ParseError(f"expected {what}, got {tok.text!r}", tok.line, tok.col)
        return tok


# ---------------------------------------------------------------------------
# parser


def parse(text: str) -> Circuit:
    """Parse IR text into a validated circuit.

    Raises :class:`ParseError` on lexical/syntax problems and
    :class:`CircuitTypeError` on static-typing problems, both carrying
    line/column positions.
    """
    stream = _TokenStream(_lex(text))
    modes: list = []
    names: list[str] = []
    index: dict[str, int] = {}
    instructions: list[Instruction] = []

    def declare(mode, tok_name: Token):
        if tok_name.text in _RESERVED:
            raise ParseError(f"{tok_name.text!r} is reserved", tok_name.line, tok_name.col)
        if tok_name.text in index:
            raise ParseError(f"mode {tok_name.text!r} already declared", tok_name.line, tok_name.col)
        index[tok_name.text] = len(modes)
        modes.append(mode)
        names.append(tok_name.text)

    def resolve(tok: Token) -> int:
        if tok.text not in index:
            raise CircuitTypeError(f"unknown mode {tok.text!r}", tok.line, tok.col)
        return index[tok.text]

    while (tok := stream.next()) is not None:
        if tok.kind != "ident":
            raise ParseError(f"expected a statement, got {tok.text!r}", tok.line, tok.col)
        head = tok.text
        if head == "qubit":
            name = stream.expect("ident", "mode name")
            declare(Qubit(), name)
        elif head in ("qumode", "rotor"):
            stream.expect("lbracket", "'['")
            size = stream.expect("number", "integer size")
            try:
                value = int(size.text)
            except ValueError:
                raise ParseError(f"{head} size must be an integer", size.line, size.col)
            stream.expect("rbracket", "']'")
            name = stream.expect("ident", "mode name")
            try:
                declare(Qumode(value) if head == "qumode" else Rotor(value), name)
            except Exception as exc:
                raise ParseError(str(exc), size.line, size.col)
        elif head == "measure":
            target = stream.expect("ident", "mode name")
            basis = stream.expect("ident", "measurement basis")
            if basis.text not in ("z", "fock", "homodyne"):
                raise ParseError(
                    f"unknown measurement basis {basis.text!r}", basis.line, basis.col
                )
            angle = 0.0
            if basis.text == "homodyne":
                angle_tok = stream.expect("number", "quadrature angle")
                angle = float(angle_tok.text)
            instructions.append(
                MeasureInstr(resolve(target), basis.text, angle, tok.line, tok.col)
            )
        elif head == "reset":
            target = stream.expect("ident", "mode name")
            instructions.append(ResetInstr(resolve(target), tok.line, tok.col))
        elif head == "barrier":
            instructions.append(Barrier(tok.line, tok.col))
        elif head in GATE_TABLE:
            gdef = GATE_TABLE[head]
            targets = tuple(
                resolve(stream.expect("ident", f"{head} target mode"))
                for _ in range(gdef.n_targets)
            )
            params = tuple(
                float(stream.expect("number", f"{head} parameter").text)
                for _ in range(gdef.n_params)
            )
            nxt = stream.peek()
            if nxt is not None and nxt.kind in ("ident", "number"):
                raise ParseError(
                    f"too many arguments for {head!r}", nxt.line, nxt.col
                )
            instructions.append(GateInstr(head, targets, params, tok.line, tok.col))
        else:
            raise CircuitTypeError(f"unknown gate {head!r}", tok.line, tok.col)
        stream.expect("semi", "';'")

    if not modes:
        raise ParseError("program declares no modes", 1, 1)
    circuit = Circuit(
        make_layout(modes, enforce_ceiling=False), tuple(names), tuple(instructions)
    )
    errors = [d for d in validate(circuit) if d.severity == "error"]
    if errors:
        first = errors[0]
        raise CircuitTypeError(first.message, first.line, first.col)
    return circuit


# ---------------------------------------------------------------------------
# validator


def validate(circuit: Circuit) -> list[Diagnostic]:
    """Static diagnostics; empty list iff every instruction type-checks.

    Deterministic and order-stable; never raises. Warnings flag gate
    parameters likely to leak population past the Fock cutoff.
    """
    diags: list[Diagnostic] = []
    layout = circuit.layout

    def err(msg, instr):
        diags.append(Diagnostic("error", msg, instr.line, instr.col))

    def warn(msg, instr):
        diags.append(Diagnostic("warning", msg, instr.line, instr.col))

    for instr in circuit.instructions:
        if isinstance(instr, Barrier):
            continue
        if isinstance(instr, (MeasureInstr, ResetInstr)):
            if not 0 <= instr.mode < layout.n_modes:
                err(f"mode index {instr.mode} out of range", instr)
                continue
            kind = layout.modes[instr.mode].kind
            if isinstance(instr, MeasureInstr):
                if instr.basis == "z" and kind != "qubit":
                    err(f"z measurement requires a qubit, got a {kind}", instr)
                elif instr.basis == "fock" and kind not in ("qumode", "rotor"):
                    err(f"fock measurement requires a qumode or rotor, got a {kind}", instr)
                elif instr.basis == "homodyne" and kind != "qumode":
                    err(f"homodyne measurement requires a qumode, got a {kind}", instr)
            continue

        gdef = GATE_TABLE.get(instr.name)
        if gdef is None:
            err(f"unknown gate {instr.name!r}", instr)
            continue
        if len(instr.targets) != gdef.n_targets or len(instr.params) != gdef.n_params:
            err(
                f"{instr.name} takes {gdef.n_targets} targets and "
                f"{gdef.n_params} parameters", instr
            )
            continue
        bad = False
        for slot, t in enumerate(instr.targets):
            if not 0 <= t < layout.n_modes:
                err(f"mode index {t} out of range", instr)
                bad = True
                break
            kind = layout.modes[t].kind
            if kind not in gdef.kinds[slot]:
                want = " or ".join(gdef.kinds[slot])
                err(f"{instr.name} requires a {want} at position {slot}, got a {kind}", instr)
                bad = True
                break
        if bad:
            continue
        if len(set(instr.targets)) != len(instr.targets):
            err(f"{instr.name} targets must be distinct modes", instr)
            continue
        if instr.name == "modadd":
            d1 = layout.modes[instr.targets[0]].dim
            d2 = layout.modes[instr.targets[1]].dim
            if d1 != d2:
                err(f"modadd requires equal cutoffs, got {d1} and {d2}", instr)
                continue
        _leakage_diagnostics(instr, layout, warn)
    return diags


def _leakage_diagnostics(instr: GateInstr, layout: RegisterLayout, warn):
    if instr.name == "dgate":
        d = layout.modes[instr.targets[0]].dim
        occ = instr.params[0] ** 2 + instr.params[1] ** 2
        if occ > d / 4:
            warn(
                f"displacement |alpha|^2 = {occ:.3g} exceeds cutoff/4 = {d / 4:.3g}",
                instr,
            )
    elif instr.name == "sq":
        d = layout.modes[instr.targets[0]].dim
        occ = math.sinh(math.hypot(*instr.params)) ** 2
        if occ > d / 4:
            warn(
                f"squeeze sinh^2|z| = {occ:.3g} exceeds cutoff/4 = {d / 4:.3g}", instr
            )
    elif instr.name in ("cdx", "cdp", "cdxx"):
        d = layout.modes[instr.targets[1]].dim
        occ = instr.params[0] ** 2 / 2
        if occ > d / 4:
            warn(
                f"conditional displacement predicts occupation {occ:.3g} above "
                f"cutoff/4 = {d / 4:.3g}", instr
            )


# ---------------------------------------------------------------------------
# serializer


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def serialize(circuit: Circuit) -> str:
    """Canonical text: declarations (layout order), then one instruction
    per line with numbers at 17 significant digits."""
    lines = []
    for mode, name in zip(circuit.layout.modes, circuit.mode_names):
        if isinstance(mode, Qubit):
            lines.append(f"qubit {name};")
        elif isinstance(mode, Qumode):
            lines.append(f"qumode[{mode.cutoff}] {name};")
        else:
            lines.append(f"rotor[{mode.l_max}] {name};")
    for instr in circuit.instructions:
        if isinstance(instr, Barrier):
            lines.append("barrier;")
        elif isinstance(instr, ResetInstr):
            lines.append(f"reset {circuit.mode_names[instr.mode]};")
        elif isinstance(instr, MeasureInstr):
            name = circuit.mode_names[instr.mode]
            if instr.basis == "homodyne":
                lines.append(f"measure {name} homodyne {_fmt(instr.angle)};")
            else:
                lines.append(f"measure {name} {instr.basis};")
        else:
            parts = [instr.name]
            parts += [circuit.mode_names[t] for t in instr.targets]
            parts += [_fmt(p) for p in instr.params]
            lines.append(" ".join(parts) + ";")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# resource counting


def resource_count(circuit: Circuit) -> dict:
    """Gate counts by kind plus dimension/memory figures.

    Pure counting: runs in O(#instructions) and never allocates state, so
    it works on layouts far beyond simulable size.
    """
    counts: dict[str, int] = {}
    measures = 0
    resets = 0
    for instr in circuit.instructions:
        if isinstance(instr, GateInstr):
            counts[instr.name] = counts.get(instr.name, 0) + 1
        elif isinstance(instr, MeasureInstr):
            measures += 1
        elif isinstance(instr, ResetInstr):
            resets += 1
    max_cutoff = 0
    for mode in circuit.layout.modes:
        if isinstance(mode, (Qumode, Rotor)):
            max_cutoff = max(max_cutoff, mode.dim)
    return {
        "gate_counts": counts,
        "measurements": measures,
        "resets": resets,
        "n_modes": circuit.layout.n_modes,
        "max_cutoff": max_cutoff,
        "total_dim": circuit.layout.total_dim,
        "memory_estimate_bytes": memory_estimate(circuit.layout, BYTES_PER_AMPLITUDE),
    }


# ---------------------------------------------------------------------------
# gate materialization (engine hook)


@lru_cache(maxsize=512)
def _materialize(name: str, dims: tuple[int, ...], kind0: str, params: tuple[float, ...]) -> LocalOperator:
    if name == "dgate":
        return displacement(params[0] + 1j * params[1], dims[0])
    if name == "sq":
        return squeeze(params[0] + 1j * params[1], dims[0])
    if name == "bs":
        return beamsplitter(params[0], params[1], dims[0], dims[1])
    if name == "rot":
        if kind0 == "rotor":
            return phase_displacement(params[0], (dims[0] - 1) // 2)
        return phase_rotation(params[0], dims[0])
    if name == "kerr":
        return kerr(params[0], dims[0])
    if name == "xkerr":
        return cross_kerr(params[0], dims[0], dims[1])
    if name == "cdx":
        return conditional_displacement("z", params[0], "x", dims[1])
    if name == "cdp":
        return conditional_displacement("z", params[0], "p", dims[1])
    if name == "cdxx":
        return conditional_displacement("x", params[0], "x", dims[1])
    if name == "jc":
        return jc_gate(params[0], dims[1])
    if name == "dft":
        op = fock_dft(dims[0])
        if kind0 == "rotor":
            return LocalOperator(op.matrix, op.dims, ("rotor",), unitary=True)
        return op
    if name == "modadd":
        return modular_add(dims[0])
    return qubit_gate(name, *params)


def gate_operator(instr: GateInstr, layout: RegisterLayout) -> LocalOperator:
    """LocalOperator for a gate instruction (matrices built lazily, cached).

    Gate definitions stay decoupled from the matrices that represent them:
    parsing, validation and resource counting never call this.
    """
    dims = tuple(layout.modes[t].dim for t in instr.targets)
    kind0 = layout.modes[instr.targets[0]].kind
    return _materialize(instr.name, dims, kind0, instr.params)
