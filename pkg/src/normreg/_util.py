import math
from fractions import Fraction


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


def as_fraction(x):
    """Snap a float to the nearest fraction with denominator <= 10**6.

    Rank arithmetic such as ``ceil(n * eps)`` must not depend on the binary
    rounding of values like ``1/6``.
    """
    if isinstance(x, Fraction):
        return x
    return Fraction(x).limit_denominator(10**6)


def ceil_mul(n, eps, scale=1):
    """``ceil(scale * n * eps)`` evaluated exactly."""
    return math.ceil(as_fraction(scale) * n * as_fraction(eps))


def floor_mul(n, eps, scale=1):
    return math.floor(as_fraction(scale) * n * as_fraction(eps))
