"""Closed-loop simulation of a linear plant driven by an RT-encrypted cloud controller."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np

from .cipher import (
    CipherVariant,
    KeyPair,
    KeyStream,
    OutputKeyPair,
    decrypt_output,
    encrypt,
    encrypt_output,
)
from .errors import Divergence

DIVERGENCE_LIMIT = 1e100


@dataclass(frozen=True, eq=False)
class PlantModel:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise ValueError(f"inconsistent plant shapes A {A.shape}, B {B.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("plant matrices must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class CloudPolicy:
    """Service run by the cloud: u(k) = K x(k) + v(k).

    ``v(k)`` is an optional seeded dither, uniform on ``[-excitation, excitation]``.
    Pure state feedback makes the input a fixed linear function of the state,
    which leaves the ciphertext dynamics unidentifiable from closed-loop data.
    """

    K: np.ndarray
    excitation: float = 0.0
    excitation_seed: int = 0

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        if not np.all(np.isfinite(K)):
            raise ValueError("feedback gain must be finite")
        if self.excitation < 0:
            raise ValueError("excitation must be non-negative")
        object.__setattr__(self, "K", K)

    def dither(self, T: int, m: int) -> np.ndarray:
        if self.excitation == 0:
            return np.zeros((T, m))
        rng = np.random.default_rng(np.random.SeedSequence(self.excitation_seed, spawn_key=(7,)))
        return rng.uniform(-self.excitation, self.excitation, (T, m))


@dataclass(frozen=True, eq=False)
class Trace:
    x: np.ndarray  # (T+1, n)
    u: np.ndarray  # (T, m)
    y: np.ndarray  # (T+1, n)
    z: np.ndarray  # (T, m)
    variant: CipherVariant = CipherVariant.DETERMINISTIC

    @property
    def T(self) -> int:
        return len(self.u)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def m(self) -> int:
        return self.u.shape[1]


Keys = Union[KeyStream, Tuple[KeyPair, OutputKeyPair]]


def spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def simulate(
    plant: PlantModel,
    policy: CloudPolicy,
    keys: Keys,
    x0=None,
    T: int = 50,
    variant: Optional[CipherVariant] = None,
    seed: int = 0,
) -> Trace:
    """Run the encrypted loop for T steps.

    At step k the plant state is encrypted to y(k), the cloud returns
    z(k) = S(k) u(k) + s(k), and the plant applies the decrypted u(k).
    ``x0`` defaults to entries uniform in [-1, 1] drawn from ``seed``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if isinstance(keys, KeyStream):
        in_keys = out_keys = keys
        key_variant = keys.variant
    else:
        in_keys, out_keys = keys
        key_variant = CipherVariant.DETERMINISTIC
    if variant is not None and CipherVariant(variant) is not key_variant:
        raise ValueError(f"variant {variant} does not match the supplied keys ({key_variant.value})")

    A, B, K = plant.A, plant.B, policy.K
    n, m = plant.n, plant.m
    if K.shape != (m, n):
        raise ValueError(f"feedback gain has shape {K.shape}, expected {(m, n)}")
    rho = spectral_radius(A + B @ K)
    if rho >= 1:
        warnings.warn(f"closed loop A+BK has spectral radius {rho:.3g} >= 1", RuntimeWarning)

    if x0 is None:
        x0 = np.random.default_rng(seed).uniform(-1.0, 1.0, n)
    x0 = np.asarray(x0, dtype=float).reshape(n)
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")

    v = policy.dither(T, m)
    xs = np.empty((T + 1, n))
    ys = np.empty((T + 1, n))
    us = np.empty((T, m))
    zs = np.empty((T, m))
    xs[0] = x0
    for k in range(T + 1):
        ys[k] = encrypt(in_keys, xs[k], k)
        if k == T:
            break
        zs[k] = encrypt_output(out_keys, K @ xs[k] + v[k], k)
        us[k] = decrypt_output(out_keys, zs[k], k)
        xs[k + 1] = A @ xs[k] + B @ us[k]
        if np.max(np.abs(xs[k + 1])) > DIVERGENCE_LIMIT:
            raise Divergence(f"state magnitude exceeded {DIVERGENCE_LIMIT:g} at step {k + 1}")
    return Trace(x=xs, u=us, y=ys, z=zs, variant=key_variant)


def add_noise(trace: Trace, sigma: float, seed: int = 0) -> Trace:
    """Copy of ``trace`` with i.i.d. Gaussian noise on the plaintext states only."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return replace(trace, x=trace.x.copy())
    rng = np.random.default_rng(seed)
    return replace(trace, x=trace.x + rng.normal(0.0, sigma, trace.x.shape))
