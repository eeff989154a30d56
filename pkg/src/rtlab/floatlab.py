"""Exhaustive analysis of the additive-noise RT cipher over IEEE-754 binary16.

Every finite half-precision value is enumerated, weighted so that the
sampling probability doubles with each exponent increment (which mimics a
uniform distribution over the reals), and ciphertext distributions
``y = Q(x + r)`` are computed exactly by summing the weights of all noise
values that round to the same outcome.

Outcomes are indexed by their 16-bit pattern.  The patterns of +inf and -inf
(0x7C00, 0xFC00) serve as the two overflow bins; negative zero is folded into
positive zero since both denote the same real number.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import NotInUniverse, PreconditionViolated
from .statdist import DistanceReport, classify

FRACTION_BITS = 10
EXPONENT_BITS = 5
BIAS = 15
ALPHA = 2.0 ** (1 - BIAS)
BETA = (2.0 - 2.0 ** -FRACTION_BITS) * 2.0 ** BIAS

N_PATTERNS = 1 << 16
POS_OVERFLOW = 0x7C00
NEG_OVERFLOW = 0xFC00
_EXP_MASK = 0x7C00
_FRAC_MASK = 0x03FF
_SIGN_MASK = 0x8000


def decode_bits(bits: int) -> float:
    """Decode a 16-bit pattern by hand (no numpy); +-inf for the overflow patterns."""
    bits = int(bits)
    if not 0 <= bits < N_PATTERNS:
        raise ValueError(f"not a 16-bit pattern: {bits}")
    sign = -1.0 if bits & _SIGN_MASK else 1.0
    exp_field = (bits & _EXP_MASK) >> FRACTION_BITS
    frac = bits & _FRAC_MASK
    if exp_field == 0x1F:
        if frac:
            return math.nan
        return sign * math.inf
    if exp_field == 0:
        return sign * math.ldexp(frac, 1 - BIAS - FRACTION_BITS)
    return sign * math.ldexp((1 << FRACTION_BITS) + frac, exp_field - BIAS - FRACTION_BITS)


def q_f16(v: float) -> float:
    """Round a finite real to the nearest binary16 value, ties to even.

    Returns ``+inf``/``-inf`` when the rounded magnitude exceeds the largest
    finite value.  Pure-Python reference; :func:`q_f16_bits` is the fast path.
    """
    v = float(v)
    if not math.isfinite(v):
        raise ValueError("q_f16 expects a finite value")
    if v == 0.0:
        return 0.0
    mag = abs(v)
    _, e2 = math.frexp(mag)  # mag in [2**(e2-1), 2**e2)
    binade = max(e2 - 1, 1 - BIAS)
    quantum = math.ldexp(1.0, binade - FRACTION_BITS)
    n = round(mag / quantum)  # exact scaling; round() is ties-to-even
    out = n * quantum
    if out > BETA:
        return math.copysign(math.inf, v)
    return math.copysign(out, v)


def q_f16_bits(v) -> np.ndarray:
    """Vectorized rounding to binary16 bit patterns (uint16), -0 folded into +0."""
    with np.errstate(over="ignore"):
        bits = np.asarray(v, dtype=np.float64).astype(np.float16).view(np.uint16)
    return np.where(bits == _SIGN_MASK, np.uint16(0), bits)


def _log2_weight(bits: int) -> int:
    """Exponent of the unnormalized sampling weight, i.e. floor(log2(|x| / alpha)).

    Zero is assigned the lowest normal bin (exponent 0).
    """
    exp_field = (bits & _EXP_MASK) >> FRACTION_BITS
    frac = bits & _FRAC_MASK
    if exp_field == 0:
        if frac == 0:
            return 0
        # |x| = frac * 2**-24, so |x| / alpha = frac * 2**-10
        return frac.bit_length() - 1 - FRACTION_BITS
    return exp_field - 1


@dataclass(frozen=True)
class F16Value:
    bits: int

    def __post_init__(self):
        if not 0 <= int(self.bits) < N_PATTERNS:
            raise ValueError(f"not a 16-bit pattern: {self.bits}")
        object.__setattr__(self, "bits", int(self.bits))

    @classmethod
    def from_float(cls, v: float) -> "F16Value":
        """Exact conversion; raises ValueError if ``v`` is not a finite binary16 value."""
        q = q_f16(v)
        if q != v:
            raise ValueError(f"{v!r} is not exactly representable in binary16")
        return cls(int(q_f16_bits(q)))

    @classmethod
    def nearest(cls, v: float) -> "F16Value":
        q = q_f16(v)
        if not math.isfinite(q):
            raise ValueError(f"{v!r} overflows binary16")
        return cls(int(q_f16_bits(q)))

    @property
    def sign(self) -> int:
        return self.bits >> 15

    @property
    def exponent_field(self) -> int:
        return (self.bits & _EXP_MASK) >> FRACTION_BITS

    @property
    def fraction(self) -> int:
        return self.bits & _FRAC_MASK

    @property
    def exponent(self) -> int:
        """Unbiased exponent e (subnormals and zero report 1 - bias)."""
        return max(self.exponent_field, 1) - BIAS

    @property
    def is_subnormal(self) -> bool:
        return self.exponent_field == 0 and self.fraction != 0

    @property
    def decoded(self) -> float:
        return decode_bits(self.bits)

    def hex(self) -> str:
        return f"{self.bits:04x}"


@dataclass(frozen=True)
class F16Universe:
    """The set of binary16 values the key generator samples from.

    Arrays are sorted by ascending decoded value.  ``weights`` are exact
    powers of two held in float64, so sums over any subset are exact.
    """

    bits: np.ndarray
    values: np.ndarray
    log2_weights: np.ndarray
    weights: np.ndarray
    gamma: float
    include_zero: bool
    include_subnormals: bool
    _index: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return (F16Value(b) for b in self.bits)

    def index_of(self, x) -> int:
        bits = _as_bits(x)
        idx = int(self._index[bits])
        if idx < 0:
            raise NotInUniverse(f"binary16 pattern {bits:04x} is not in the universe")
        return idx

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights * self.gamma


def _as_bits(x) -> int:
    if isinstance(x, F16Value):
        return x.bits
    return F16Value.from_float(x).bits


def enumerate_f16(include_zero: bool = True, include_subnormals: bool = False) -> F16Universe:
    """All finite binary16 values (NaN and infinities excluded), per the flags."""
    all_bits = np.arange(N_PATTERNS, dtype=np.uint16)
    exp_field = (all_bits & _EXP_MASK) >> FRACTION_BITS
    frac = all_bits & _FRAC_MASK
    keep = exp_field != 0x1F
    keep &= all_bits != _SIGN_MASK  # -0 duplicates +0
    is_zero = (exp_field == 0) & (frac == 0)
    is_sub = (exp_field == 0) & (frac != 0)
    if not include_zero:
        keep &= ~is_zero
    if not include_subnormals:
        keep &= ~is_sub
    bits = all_bits[keep]
    values = bits.view(np.float16).astype(np.float64)
    order = np.argsort(values, kind="stable")
    bits, values = bits[order], values[order]

    log2_w = np.array([_log2_weight(int(b)) for b in bits], dtype=np.int64)
    weights = np.ldexp(1.0, log2_w)
    gamma = 1.0 / weights.sum()

    index = np.full(N_PATTERNS, -1, dtype=np.int64)
    index[bits] = np.arange(len(bits))
    return F16Universe(
        bits=bits,
        values=values,
        log2_weights=log2_w,
        weights=weights,
        gamma=gamma,
        include_zero=include_zero,
        include_subnormals=include_subnormals,
        _index=index,
    )


def sampling_probability(x, universe: F16Universe) -> float:
    return float(universe.probabilities[universe.index_of(x)])


def sample_f16(universe: F16Universe, size: int, r_max: float = BETA, seed: int = 0) -> np.ndarray:
    """Draw noise values from the universe restricted to |r| <= r_max."""
    rng = np.random.default_rng(seed)
    mask = np.abs(universe.values) <= r_max
    w = universe.weights[mask]
    return rng.choice(universe.values[mask], size=size, p=w / w.sum())


@dataclass(frozen=True)
class CiphertextDistribution:
    """Exact distribution of ``Q(x_tilde + r)`` indexed by outcome bit pattern.

    ``weights`` holds the summed sampling weights per outcome.  They are
    integers below 2**53, so they and any sum of them are exact in float64;
    probabilities are ``weights / norm``.
    """

    weights: np.ndarray  # length 2**16
    norm: float
    x_tilde: float
    r_max: float
    renormalized: bool = True

    @property
    def probs(self) -> np.ndarray:
        return self.weights / self.norm

    def __getitem__(self, y) -> float:
        if isinstance(y, F16Value):
            return float(self.weights[y.bits] / self.norm)
        return float(self.weights[int(q_f16_bits(y))] / self.norm)

    def total(self) -> float:
        return float(self.weights.sum() / self.norm)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights)

    def as_dict(self) -> dict[float, float]:
        """Nonzero outcomes keyed by decoded value (+-inf for the overflow bins)."""
        idx = self.support()
        vals = idx.astype(np.uint16).view(np.float16).astype(np.float64)
        return dict(zip(vals.tolist(), self.probs[idx].tolist()))


def ciphertext_distribution(
    x_tilde,
    r_max: float,
    universe: F16Universe,
    renormalize: bool = True,
) -> CiphertextDistribution:
    """Distribution of ciphertexts for a fixed binary16 plaintext.

    Every admissible noise value ``|r| <= r_max`` contributes its sampling
    weight to the outcome ``Q(x_tilde + r)``.  The sum is formed in binary64,
    where it is exact for two binary16 operands, then rounded once.

    With ``renormalize=False`` the global normalizer is kept, so the result
    only sums to one when ``r_max`` covers the whole universe.
    """
    if r_max < 0 or not math.isfinite(r_max):
        raise PreconditionViolated("r_max must be finite and non-negative")
    x = decode_bits(_as_bits(x_tilde))
    mask = np.abs(universe.values) <= r_max
    if not mask.any():
        raise PreconditionViolated(f"no noise value satisfies |r| <= {r_max}")
    w = universe.weights[mask]
    outcomes = q_f16_bits(x + universe.values[mask])
    acc = np.bincount(outcomes, weights=w, minlength=N_PATTERNS)
    norm = float(w.sum()) if renormalize else 1.0 / universe.gamma
    return CiphertextDistribution(acc, norm, x, float(r_max), renormalize)


def tv_distance(d1: CiphertextDistribution, d2: CiphertextDistribution) -> float:
    """Half the L1 distance.

    With a shared normalizer the absolute weight differences sum exactly, so
    the single final division gives the correctly rounded distance, which
    never exceeds 1.
    """
    if d1.norm == d2.norm:
        return 0.5 * float(np.abs(d1.weights - d2.weights).sum()) / d1.norm
    return 0.5 * float(np.abs(d1.probs - d2.probs).sum())


def stat_distance_f16(x1, x2, r_max: float, universe: F16Universe) -> DistanceReport:
    """Exact total-variation distance between the two ciphertext distributions."""
    d = tv_distance(
        ciphertext_distribution(x1, r_max, universe),
        ciphertext_distribution(x2, r_max, universe),
    )
    return DistanceReport(D=d, method="ExhaustiveFloat", classification=classify(d))


def figure1_data(stride: int = 200, universe: F16Universe | None = None) -> np.ndarray:
    """(value, probability) rows for every ``stride``-th universe member.

    The stride is counted outward from the smallest non-negative member and
    mirrored, so the emitted set is symmetric under negation.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if universe is None:
        universe = enumerate_f16()
    n = len(universe)
    first = int(np.searchsorted(universe.values, 0.0))
    pos = np.arange(first, n, stride)
    neg = (n - 1 - pos)[::-1]
    sel = np.concatenate([neg[neg < first], pos])
    return np.column_stack([universe.values[sel], universe.probabilities[sel]])


def default_r_max(fraction: float = 0.9999) -> float:
    return q_f16(fraction * BETA)


def figure2_axis(n_points: int = 100, span_fraction: float = 1e-4) -> np.ndarray:
    """Linearly spaced plaintexts over +-span_fraction*beta, snapped to binary16."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    raw = np.linspace(-span_fraction * BETA, span_fraction * BETA, n_points)
    return q_f16_bits(raw).view(np.float16).astype(np.float64)


def _max_workers() -> int:
    env = os.environ.get("RT_LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def distance_matrix(dists: Sequence[CiphertextDistribution]) -> np.ndarray:
    """Pairwise TV distances; row i is computed with one vectorized pass.

    Entries equal :func:`tv_distance` bit for bit, since the weight sums are
    exact in any order.
    """
    norms = {d.norm for d in dists}
    if len(norms) != 1:
        raise PreconditionViolated("distributions must share one normalizer")
    norm = norms.pop()
    stack = np.vstack([d.weights for d in dists])
    # restrict to outcomes that carry mass somewhere; zero columns add nothing
    stack = stack[:, np.flatnonzero(stack.any(axis=0))]
    n = len(stack)
    out = np.zeros((n, n))
    for i in range(n):
        out[i] = 0.5 * np.abs(stack[i] - stack).sum(axis=1) / norm
    return out


def figure2_grid(
    n_points: int = 100,
    r_max: float | None = None,
    universe: F16Universe | None = None,
    axis: Iterable[float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Distance heat map over a grid of plaintexts.

    Returns ``(axis, D)`` with ``D[i, j]`` the exact distance between
    plaintexts ``axis[i]`` and ``axis[j]``.
    """
    if universe is None:
        universe = enumerate_f16()
    if r_max is None:
        r_max = default_r_max()
    xs = figure2_axis(n_points) if axis is None else np.asarray(list(axis), dtype=np.float64)

    def one(x):
        return ciphertext_distribution(float(x), r_max, universe)

    workers = min(_max_workers(), len(xs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            dists = list(pool.map(one, xs))
    else:
        dists = [one(x) for x in xs]
    return xs, distance_matrix(dists)
