"""Exception hierarchy.

Everything raised deliberately by the package derives from :class:`CRTError`,
so callers can catch one type. Input-validation errors additionally derive
from :class:`ValueError`.
"""


class CRTError(Exception):
    """Base class for all errors raised by crt_armor."""


class InputError(CRTError, ValueError):
    """The caller supplied malformed or inconsistent input."""


class NotCoprime(InputError):
    pass


class NotAscending(InputError):
    pass


class NonIntegerGamma(InputError):
    pass


class OutOfRange(InputError):
    pass


class LambdaTooLarge(InputError):
    pass


class RangeTooLarge(InputError):
    pass


class EmptyInput(InputError):
    pass


class ReconstructionError(CRTError):
    """Decoding or reconstruction could not produce an answer."""


class DecodeFailure(ReconstructionError):
    pass


class Ambiguous(ReconstructionError):
    pass


class NoSolution(ReconstructionError):
    pass


class CombinatorialBlowup(ReconstructionError):
    pass


class NoGap(ReconstructionError):
    """No gap wider than 2*delta between common residues: the error bound is violated."""


class NonIntegralQuotient(ReconstructionError):
    pass


class EmptyScriptN(ReconstructionError):
    """No admissible cut point exists; too many residue sets are corrupted."""


class AmbiguousReconstruction(ReconstructionError):
    """No cut produced a unique set of folding numbers."""


class TooFewSurvivors(ReconstructionError):
    pass


class PeakCountMismatch(ReconstructionError):
    pass
