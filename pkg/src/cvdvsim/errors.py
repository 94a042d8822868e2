"""Exception taxonomy shared by the whole package.

Every exception carries a short machine-readable ``code`` so front ends
(CLI exit codes, scripting layers) can map errors without string matching.
"""


class CvdvError(Exception):
    """Base class; ``code`` identifies the error family."""

    code = "error"


class CapacityError(CvdvError):
    """State would exceed the configured memory ceiling."""

    code = "capacity"

    def __init__(self, required_bytes: int, allowed_bytes: int):
        self.required_bytes = required_bytes
        self.allowed_bytes = allowed_bytes
        super().__init__(
            f"state requires {required_bytes} bytes but the memory ceiling "
            f"is {allowed_bytes} bytes"
        )


class ModeIndexError(CvdvError):
    """A coordinate or mode reference is out of range."""

    code = "index"


class LayoutMismatchError(CvdvError):
    """Two states (or a state and an operator) disagree on layout."""

    code = "layout"


class OperatorError(CvdvError):
    """Invalid operator construction parameters."""

    code = "operator"


class InsufficientCutoffError(CvdvError):
    """A requested state or evolution does not fit in the Fock cutoff."""

    code = "cutoff"


class ParseError(CvdvError):
    """Lexical or syntactic error in circuit IR text."""

    code = "parse"

    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class CircuitTypeError(CvdvError):
    """Static validation failure (kind mismatch, bad arity, unknown gate)."""

    code = "type"

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class MeasurementError(CvdvError):
    """Sampling failure, e.g. measurement of a zero-norm branch."""

    code = "measurement"


class GridUnderflowError(CvdvError):
    """Quadrature wavefunction mass fell off the homodyne grid."""

    code = "grid"


class UnsupportedTermError(CvdvError):
    """Hamiltonian term too wide for the Trotter engine (cap: 3 modes)."""

    code = "term"


class HermiticityError(CvdvError):
    """An operation requiring a Hermitian expression got a non-Hermitian one."""

    code = "hermiticity"


class LeakageWarning(UserWarning):
    """Gate parameters predict significant population near the Fock cutoff."""
