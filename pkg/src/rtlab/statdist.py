"""Statistical distances between ciphertext distributions of the RT variants.

Closed forms over the reals for the deterministic cipher, the cipher with
fresh additive noise, and the scalar cipher with fresh multiplicative and
additive keys; a seeded histogram estimator serves as the independent check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import PreconditionViolated, SupportMismatch

PERFECT_INDISTINGUISHABLE = "PerfectIndistinguishable"
STATISTICAL = "Statistical"
DISTINGUISHABLE = "Distinguishable"
PERFECTLY_DISTINGUISHABLE = "PerfectlyDistinguishable"


@dataclass(frozen=True)
class DistanceReport:
    D: float
    method: str  # "ClosedForm" | "MonteCarlo" | "ExhaustiveFloat"
    classification: str
    mc_stderr: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.D <= 1.0:
            raise ValueError(f"distance out of range: {self.D}")

    def to_dict(self) -> dict:
        return {
            "D": self.D,
            "method": self.method,
            "classification": self.classification,
            "mc_stderr": self.mc_stderr,
        }


def negl(kappa: int) -> float:
    return 2.0 ** -kappa


def classify(D: float, kappa: Optional[int] = None) -> str:
    if not 0.0 <= D <= 1.0:
        raise ValueError(f"distance out of range: {D}")
    if D == 0.0:
        return PERFECT_INDISTINGUISHABLE
    if D == 1.0:
        return PERFECTLY_DISTINGUISHABLE
    if kappa is not None and D <= negl(kappa):
        return STATISTICAL
    return DISTINGUISHABLE


def _report(D: float, kappa: Optional[int] = None) -> DistanceReport:
    return DistanceReport(D=D, method="ClosedForm", classification=classify(D, kappa))


def d_deterministic(x1, x2) -> DistanceReport:
    """Fixed keys map each plaintext to a point mass, so distinct plaintexts never overlap."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != x2.shape:
        raise ValueError("plaintexts must have equal dimension")
    return _report(0.0 if np.array_equal(x1, x2) else 1.0)


def d_resample_noise(Rx1, Rx2, i: int, r_max: float, kappa: Optional[int] = None) -> DistanceReport:
    """Distance of the i-th ciphertext component under fresh uniform noise in [-r_max, r_max].

    Two uniforms of width 2*r_max shifted by delta overlap in 2*r_max - delta.
    """
    if not r_max > 0:
        raise PreconditionViolated("r_max must be positive")
    Rx1 = np.atleast_1d(np.asarray(Rx1, dtype=float))
    Rx2 = np.atleast_1d(np.asarray(Rx2, dtype=float))
    if not 0 <= i < len(Rx1):
        raise IndexError(f"component {i} out of range for dimension {len(Rx1)}")
    delta = abs(Rx1[i] - Rx2[i])
    D = delta / (2.0 * r_max) if delta <= 2.0 * r_max else 1.0
    return _report(float(D), kappa)


def d_resample_noise_max(Rx1, Rx2, r_max: float, kappa: Optional[int] = None) -> DistanceReport:
    """Largest per-component distance.

    Convenience summary only: it is a lower bound on the joint distance of
    the full ciphertext vector, not that distance itself.
    """
    n = len(np.atleast_1d(Rx1))
    D = max(d_resample_noise(Rx1, Rx2, i, r_max).D for i in range(n))
    return _report(D, kappa)


def _check_resample_both(x: float, R_max: float, r_max: float):
    if x == 0:
        raise PreconditionViolated("plaintext 0 is excluded")
    if not (R_max > 0 and r_max > 0):
        raise PreconditionViolated("R_max and r_max must be positive")


def d_resample_both_scalar(x1: float, x2: float, R_max: float, r_max: float,
                           kappa: Optional[int] = None) -> DistanceReport:
    for x in (x1, x2):
        _check_resample_both(x, R_max, r_max)
        if r_max < abs(x) * R_max:
            raise PreconditionViolated(
                f"r_max={r_max} < |x|*R_max={abs(x) * R_max}; closed form needs the noise to dominate"
            )
    # numerator <= r_max under the precondition, so no overflow for tiny r_max
    D = abs(abs(x1) - abs(x2)) * R_max / (4.0 * r_max)
    return _report(D, kappa)


def conditional_density_resample_both(y, x: float, R_max: float, r_max: float):
    """Density of y = R*x + r with R ~ U(-R_max, R_max), r ~ U(-r_max, r_max).

    The convolution of two centred uniforms is a symmetric trapezoid.  When
    r_max >= |x|*R_max it has a ramp of width 2|x|R_max around -r_max (and its
    mirror) and a plateau of height 1/(2 r_max); the other ordering is handled
    by the same expression with the half-widths swapped.
    """
    _check_resample_both(x, R_max, r_max)
    a = abs(x) * R_max
    lo, hi = min(a, r_max), max(a, r_max)
    t = np.abs(np.asarray(y, dtype=float))
    ramp = (a + r_max - t) / (4.0 * a * r_max)
    out = np.where(t <= hi - lo, 1.0 / (2.0 * hi), np.where(t <= a + r_max, ramp, 0.0))
    return float(out) if np.ndim(out) == 0 else out


# Monte-Carlo oracle ---------------------------------------------------------

Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class ShiftedUniform:
    """Samples ``center + U(-r_max, r_max)``; one ciphertext component with fresh noise."""

    center: float
    r_max: float

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.r_max, self.center + self.r_max

    def __call__(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.center + rng.uniform(-self.r_max, self.r_max, n)


@dataclass(frozen=True)
class ResampleBothScalar:
    """Samples ``R*x + r`` with both keys fresh and uniform."""

    x: float
    R_max: float
    r_max: float

    @property
    def support(self) -> tuple[float, float]:
        w = abs(self.x) * self.R_max + self.r_max
        return -w, w

    def __call__(self, rng: np.random.Generator, n: int) -> np.ndarray:
        R = rng.uniform(-self.R_max, self.R_max, n)
        r = rng.uniform(-self.r_max, self.r_max, n)
        return R * self.x + r


def mc_distance(
    sampler1: Sampler,
    sampler2: Sampler,
    n_samples: int = 10**6,
    n_bins: int = 128,
    support: Optional[Sequence[float]] = None,
    seed: int = 0,
) -> DistanceReport:
    """Histogram estimate of the distance between two sampled distributions.

    Both samplers share one equal-width binning of ``support`` (default: the
    union of the samplers' ``support`` attributes).  The reported standard
    error sums per-bin binomial standard deviations of the count difference,
    which also bounds the upward bias of the estimator on identical inputs.
    """
    if n_samples < 10**4:
        raise PreconditionViolated("n_samples must be at least 1e4")
    if support is None:
        try:
            (a1, b1), (a2, b2) = sampler1.support, sampler2.support
        except AttributeError as exc:
            raise PreconditionViolated("support must be given for samplers without one") from exc
        support = (min(a1, a2), max(b1, b2))
    lo, hi = map(float, support)
    if not hi > lo:
        raise PreconditionViolated("empty support")

    s1, s2 = np.random.SeedSequence(seed).spawn(2)
    x1 = np.asarray(sampler1(np.random.default_rng(s1), n_samples), dtype=float)
    x2 = np.asarray(sampler2(np.random.default_rng(s2), n_samples), dtype=float)
    edges = np.linspace(lo, hi, n_bins + 1)
    c1, _ = np.histogram(x1, edges)
    c2, _ = np.histogram(x2, edges)
    outside = (2 * n_samples - c1.sum() - c2.sum()) / (2 * n_samples)
    if outside > 1e-3:
        raise SupportMismatch(f"{outside:.2%} of samples fall outside [{lo}, {hi}]")

    # density times bin width reduces to the count fraction; summing integer
    # counts before the single division keeps D <= 1 exactly
    D = 0.5 * float(np.abs(c1 - c2).sum()) / n_samples
    p1 = c1 / n_samples
    p2 = c2 / n_samples
    var = (p1 * (1 - p1) + p2 * (1 - p2)) / n_samples
    stderr = 0.5 * float(np.sqrt(var).sum())
    return DistanceReport(D=D, method="MonteCarlo", classification=classify(D), mc_stderr=stderr)
