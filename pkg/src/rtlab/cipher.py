"""Random affine transformation (RT) cipher over binary64 reals.

Encryption is ``y = R x + r``.  The deterministic variant fixes ``(R, r)``;
the probabilistic variants draw a fresh ``r(k)`` (ResampleNoise) or fresh
``(R(k), r(k))`` (ResampleBoth) for every time step ``k``.  Per-step keys are
addressed by ``(seed, channel, k)`` so encryptor and decryptor derive the same
keys without exchanging them.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .errors import NonFiniteInput, RejectionLimitExceeded, SingularKey

INVERTIBILITY_RTOL = 1e-10
MAX_REJECTIONS = 100

_INPUT_CHANNEL = 0
_OUTPUT_CHANNEL = 1


class CipherVariant(str, Enum):
    DETERMINISTIC = "Deterministic"
    RESAMPLE_NOISE = "ResampleNoise"
    RESAMPLE_BOTH = "ResampleBoth"


def is_invertible(M: np.ndarray, rtol: float = INVERTIBILITY_RTOL) -> bool:
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    return bool(s[-1] > rtol * s[0])


def _check_finite(v, what="input"):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput(f"non-finite {what}")
    return v


@dataclass(frozen=True, eq=False)
class KeyPair:
    R: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        if R.shape != (len(r), len(r)):
            raise ValueError(f"key shapes disagree: R {R.shape}, r {r.shape}")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return len(self.r)


@dataclass(frozen=True, eq=False)
class OutputKeyPair:
    S: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        s = np.atleast_1d(np.asarray(self.s, dtype=float))
        if S.shape != (len(s), len(s)):
            raise ValueError(f"key shapes disagree: S {S.shape}, s {s.shape}")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "s", s)

    @property
    def m(self) -> int:
        return len(self.s)


def _rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=path))


def _sample_matrix(rng: np.random.Generator, n: int, R_max: float) -> np.ndarray:
    for _ in range(MAX_REJECTIONS):
        R = rng.uniform(-R_max, R_max, (n, n))
        if is_invertible(R):
            return R
    raise RejectionLimitExceeded(
        f"{MAX_REJECTIONS} consecutive {n}x{n} samples with R_max={R_max} failed the invertibility test"
    )


def _check_bounds(n, R_max, r_max):
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if R_max < 0 or r_max < 0:
        raise ValueError("key bounds must be non-negative")


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


def _fixed_keys(seed, channel, n, R_max, r_max):
    rng = _rng(seed, channel, 0)
    R = _sample_matrix(rng, n, R_max)
    return R, rng.uniform(-r_max, r_max, n)


def keygen(n: int, R_max: float, r_max: float, seed: int) -> KeyPair:
    """Uniform entrywise keys with the invertibility check on R."""
    _check_bounds(n, R_max, r_max)
    return KeyPair(*_fixed_keys(_check_seed(seed), _INPUT_CHANNEL, n, R_max, r_max))


def output_keygen(m: int, S_max: float, s_max: float, seed: int) -> OutputKeyPair:
    _check_bounds(m, S_max, s_max)
    return OutputKeyPair(*_fixed_keys(_check_seed(seed), _OUTPUT_CHANNEL, m, S_max, s_max))


@dataclass(frozen=True)
class KeyStream:
    """Seeded source of per-step keys for input (n) and output (m) channels.

    Output keys use the same bounds as input keys.
    """

    seed: int
    R_max: float
    r_max: float
    variant: CipherVariant
    n: int
    m: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", _check_seed(self.seed))
        object.__setattr__(self, "variant", CipherVariant(self.variant))
        if self.m == 0:
            object.__setattr__(self, "m", self.n)
        _check_bounds(self.n, self.R_max, self.r_max)
        _check_bounds(self.m, self.R_max, self.r_max)

    def _at(self, channel: int, dim: int, k: int):
        if self.variant is CipherVariant.DETERMINISTIC:
            return _fixed_keys(self.seed, channel, dim, self.R_max, self.r_max)
        if k < 0:
            raise ValueError("time step must be non-negative")
        step = _rng(self.seed, channel, 1, k)
        if self.variant is CipherVariant.RESAMPLE_NOISE:
            R, _ = _fixed_keys(self.seed, channel, dim, self.R_max, self.r_max)
        else:
            R = _sample_matrix(step, dim, self.R_max)
        return R, step.uniform(-self.r_max, self.r_max, dim)

    def keys_at(self, k: int) -> KeyPair:
        return KeyPair(*self._at(_INPUT_CHANNEL, self.n, k))

    def output_keys_at(self, k: int) -> OutputKeyPair:
        return OutputKeyPair(*self._at(_OUTPUT_CHANNEL, self.m, k))


InputKeys = Union[KeyPair, KeyStream]
OutputKeys = Union[OutputKeyPair, KeyStream]


def _input_keys(keys: InputKeys, k: int) -> KeyPair:
    return keys.keys_at(k) if isinstance(keys, KeyStream) else keys


def _output_keys(keys: OutputKeys, k: int) -> OutputKeyPair:
    return keys.output_keys_at(k) if isinstance(keys, KeyStream) else keys


def _solve(M, b):
    try:
        out = np.linalg.solve(M, b)
    except np.linalg.LinAlgError as exc:
        raise SingularKey(str(exc)) from exc
    if not np.all(np.isfinite(out)):
        raise SingularKey("decryption produced non-finite values")
    return out


def encrypt(keys: InputKeys, x, k: int = 0) -> np.ndarray:
    kp = _input_keys(keys, k)
    x = _check_finite(x, "plaintext")
    return kp.R @ x + kp.r


def decrypt(keys: InputKeys, y, k: int = 0) -> np.ndarray:
    kp = _input_keys(keys, k)
    y = _check_finite(y, "ciphertext")
    return _solve(kp.R, y - kp.r)


def encrypt_output(keys: OutputKeys, u, k: int = 0) -> np.ndarray:
    kp = _output_keys(keys, k)
    u = _check_finite(u, "plaintext")
    return kp.S @ u + kp.s


def decrypt_output(keys: OutputKeys, z, k: int = 0) -> np.ndarray:
    kp = _output_keys(keys, k)
    z = _check_finite(z, "ciphertext")
    return _solve(kp.S, z - kp.s)
