"""Symmetric i.i.d. entry laws and seeded matrix generation."""
import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ._util import ParameterError

KINDS = ("gaussian", "signed_bernoulli", "symmetric_pareto")


@dataclass(frozen=True)
class DistributionSpec:
    """Declarative description of a symmetric entry distribution.

    ``signed_bernoulli`` puts mass ``p/2`` on each of ``+-v`` and ``1-p`` on 0,
    with ``v = 1/sqrt(p)`` when normalized (``v = 1`` otherwise).
    ``symmetric_pareto`` has density ``(alpha/2) x0**alpha |x|**(-alpha-1)``
    on ``|x| >= x0``; normalization picks ``x0 = sqrt((alpha-2)/alpha)``.
    """

    kind: str = "gaussian"
    p: Optional[float] = None
    alpha: Optional[float] = None
    normalize: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "signed_bernoulli":
            if self.p is None or not (0.0 < self.p <= 1.0):
                raise ParameterError(f"signed_bernoulli needs p in (0, 1], got {self.p}")
        if self.kind == "symmetric_pareto":
            if self.alpha is None or not self.alpha > 2.0:
                raise ParameterError(
                    f"symmetric_pareto needs alpha > 2 (finite variance), got {self.alpha}")

    @property
    def x0(self):
        """Lower edge of ``|X|`` for the Pareto law."""
        if self.kind != "symmetric_pareto":
            raise ParameterError("x0 is only defined for symmetric_pareto")
        if self.normalize:
            return math.sqrt((self.alpha - 2.0) / self.alpha)
        return 1.0

    def variance(self):
        if self.kind == "gaussian":
            return 1.0
        if self.kind == "signed_bernoulli":
            return 1.0 if self.normalize else self.p
        return self.alpha * self.x0**2 / (self.alpha - 2.0)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - {"kind", "p", "alpha", "normalize"}
        if unknown:
            raise ParameterError(f"unknown DistributionSpec fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def derive_seed(master_seed, trial, purpose):
    """64-bit sub-seed for one ``(trial, purpose)`` stream.

    Only the triple matters, so streams do not depend on scheduling order.
    """
    if not 0 <= int(master_seed) < 2**64:
        raise ParameterError("master_seed must be a 64-bit unsigned integer")
    h = hashlib.blake2b(digest_size=8, person=b"normreg-seed")
    h.update(struct.pack("<QQ", int(master_seed), int(trial)))
    h.update(str(purpose).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def stream(master_seed, trial=0, purpose="matrix"):
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, trial, purpose)))


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_entries(spec, size, rng):
    """Draw i.i.d. entries of the given shape."""
    rng = _as_rng(rng)
    if spec.kind == "gaussian":
        return rng.standard_normal(size)
    if spec.kind == "signed_bernoulli":
        v = 1.0 / math.sqrt(spec.p) if spec.normalize else 1.0
        u = rng.random(size)
        out = np.zeros(size)
        out[u < spec.p] = -v
        out[u < 0.5 * spec.p] = v
        return out
    # inverse CDF of |X|: P(|X| > x) = (x0/x)**alpha; 1 - U lies in (0, 1]
    mag = spec.x0 * (1.0 - rng.random(size)) ** (-1.0 / spec.alpha)
    sign = rng.integers(0, 2, size=size) * 2 - 1
    return mag * sign


def sample_matrix(spec, n, rng):
    """n x n matrix with i.i.d. entries from ``spec``."""
    if int(n) < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    n = int(n)
    return sample_entries(spec, (n, n), rng)


def pareto_square_quantile(alpha, x0, l):
    """Exact ``2**-l`` upper quantile of ``X**2`` under the symmetric Pareto law.

    ``q_l = inf{t : P(X**2 > t) <= 2**-l}``; since ``P(X**2 > t) = 1`` below
    ``x0**2`` the infimum for ``l = 0`` is 0.
    """
    if not alpha > 2.0 or not x0 > 0.0:
        raise ParameterError("need alpha > 2 and x0 > 0")
    if l < 0:
        raise ParameterError("l must be nonnegative")
    if l == 0:
        return 0.0
    return x0 * x0 * 2.0 ** (2.0 * l / alpha)
