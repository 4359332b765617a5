"""
src/eswap_sim/exceptions.py

Error hierarchy shared by the simulation, tomography and experiment layers
"""


class EswapSimError(Exception):
    """Base class for all package errors"""


class SpaceMismatch(EswapSimError, ValueError):
    """Operands live on incompatible mode spaces"""


class NonFinite(EswapSimError, ArithmeticError):
    """A matrix function produced NaN or infinite entries"""


class CompileError(EswapSimError, RuntimeError):
    """A compiled circuit failed its equivalence check"""


class StepTooLarge(EswapSimError, RuntimeError):
    """Integrator local error estimate exceeds tolerance"""


class CPViolation(EswapSimError, RuntimeError):
    """Channel Choi matrix has negativity beyond tolerance"""


class UnderdeterminedGrid(EswapSimError, ValueError):
    """Tomography data cannot determine the requested density matrix"""


class NonConvergence(EswapSimError, RuntimeError):
    """A reconstruction or fit did not produce a finite solution"""


class SeedRequired(EswapSimError, ValueError):
    """Reproducible sampling was requested without a seed"""


class EncodingUnsupported(EswapSimError, ValueError):
    """Operation is not defined for the given logical encoding"""


class ConfigError(EswapSimError, ValueError):
    """Invalid or unknown entry in an experiment definition file"""


class TruncationWarning(UserWarning):
    """Fock-space cutoff is too small for the requested amplitude"""
