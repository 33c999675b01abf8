"""Exception types raised by the pnpuct library."""


class PnPuctError(Exception):
    """Base class for all pnpuct errors."""


# --- code generation ---

class NonPrimitivePolynomial(PnPuctError):
    """Feedback taps whose shift-register state cycle is shorter than 2^M - 1."""


class InvalidSeed(PnPuctError):
    """Shift-register seed that is empty, malformed, or the trivial fixed point."""


class NotPrime(PnPuctError):
    """Legendre sequence length that is composite or below 3."""


class AlreadyModified(PnPuctError):
    """Bias modification requested on a code that already carries one."""


class NotLs4Compatible(PnPuctError):
    """Zero-replacement binarization requested for a length with n_bit % 4 != 3."""


class UnsupportedLength(PnPuctError):
    """Reference-code length outside the family (Barker is 13, Golay powers of 2)."""


# --- waveforms ---

class TimingMismatch(PnPuctError):
    """Bit duration and frame rate whose product is not a positive integer."""


class NonPositiveAmplitude(PnPuctError):
    """Heat-flux amplitude that is zero or negative."""


class UnmodifiedCode(PnPuctError):
    """Matched filter requested from a code without the perfect-PACF bias."""


# --- thermal simulation ---

class RateMismatch(PnPuctError):
    """Impulse response and excitation sampled at different frame rates."""


# --- DC removal ---

class DegenerateTrace(PnPuctError):
    """Pixel trace that is all zero or contains non-finite samples."""


class BiasMismatch(PnPuctError):
    """Code whose stored bias disagrees with the value implied by its kind."""


# --- pulse compression ---

class TooFewPeriods(PnPuctError):
    """Compression input covering fewer than two excitation periods."""


class ShapeMismatch(PnPuctError):
    """Array dimensions inconsistent with the timing or filter length."""


class EmptyRegion(PnPuctError):
    """Metric region containing no pixels."""


# --- stack I/O ---

class BadMagic(PnPuctError):
    """Stack file that does not start with the TGS1 magic bytes."""


class TruncatedFile(PnPuctError):
    """Stack file shorter than its header promises."""


class NonFiniteData(PnPuctError):
    """Stack data containing NaN or infinity."""


class IndexOutOfRange(PnPuctError):
    """Frame index or pixel coordinate outside the stack."""


# --- pipeline ---

class PipelineStageError(PnPuctError):
    """Failure inside a pipeline stage, tagged with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
