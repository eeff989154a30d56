"""Key-recovery attacks on the deterministic RT cipher.

Known-plaintext: ``y = R x + r`` is linear in ``(vec R, r)``; stacking the
rows ``([x^T 1] kron I_n)`` for n+1 pairs gives a square system, and more
pairs give a least-squares problem solved with the pseudo-inverse.

Known-plant: differencing removes the offsets, so consecutive ciphertext
differences obey ``dy(k+1) = V dy(k) + W dz(k)`` with ``V = R A R^-1`` and
``W = R B S^-1``.  V leaks the spectrum of A, and with A known the Sylvester
equation ``V R - R A = 0`` confines vec(R) to a small null space that one
plaintext difference pins down.

``vec`` is column-stacking throughout (``order='F'``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .cipher import is_invertible
from .errors import (
    DegeneratePlaintexts,
    NeedMoreData,
    SingularKey,
    TrivialNullspace,
    UnderdeterminedAlpha,
    ZeroDifference,
)

RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class PlaintextCiphertextPair:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape:
            raise ValueError("plaintext and ciphertext dimensions differ")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("pairs must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True, eq=False)
class AttackResult:
    R_hat: np.ndarray
    r_hat: np.ndarray
    residual: float
    rank: int
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "R_hat": self.R_hat.tolist(),
            "r_hat": self.r_hat.tolist(),
            "residual": self.residual,
            "rank": self.rank,
        }


@dataclass(frozen=True, eq=False)
class PlantIdentification:
    V: np.ndarray
    W: np.ndarray
    residual: float = 0.0
    rank: int = 0


def vec(M: np.ndarray) -> np.ndarray:
    return np.asarray(M).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape(n, -1, order="F")


def numerical_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def _stack_pairs(pairs) -> Tuple[np.ndarray, np.ndarray]:
    pairs = [p if isinstance(p, PlaintextCiphertextPair) else PlaintextCiphertextPair(*p) for p in pairs]
    if not pairs:
        raise ValueError("no pairs supplied")
    X = np.vstack([p.x for p in pairs])
    Y = np.vstack([p.y for p in pairs])
    return X, Y


def affine_system(X: np.ndarray) -> np.ndarray:
    """Coefficient matrix with one ``[x^T 1] kron I_n`` block row per plaintext."""
    p, n = X.shape
    eye = np.eye(n)
    return np.vstack([np.kron(np.append(x, 1.0), eye) for x in X])


def _fit_residual(R, r, X, Y) -> float:
    err = X @ R.T + r - Y
    return float(np.sqrt(np.mean(err**2)))


def _split(theta: np.ndarray, n: int):
    return unvec(theta[: n * n], n), theta[n * n:]


def kpa_exact(pairs: Sequence, rtol: float = RANK_RTOL) -> AttackResult:
    """Solve for (R, r) from exactly n+1 affinely independent pairs."""
    X, Y = _stack_pairs(pairs)
    p, n = X.shape
    if p != n + 1:
        raise ValueError(f"exact attack needs n+1 = {n + 1} pairs, got {p}")
    H = affine_system(X)
    rank = numerical_rank(H, rtol)
    if rank < H.shape[1]:
        raise DegeneratePlaintexts(
            f"stacked system has rank {rank} < {H.shape[1]}; plaintexts are affinely dependent"
        )
    theta = np.linalg.solve(H, Y.reshape(-1))
    R, r = _split(theta, n)
    return AttackResult(R, r, _fit_residual(R, r, X, Y), rank, rtol)


def kpa_least_squares(pairs: Sequence, rtol: float = RANK_RTOL) -> AttackResult:
    """Minimum-norm least-squares keys ``H^+ Y`` from p >= n+1 pairs."""
    X, Y = _stack_pairs(pairs)
    p, n = X.shape
    if p < n + 1:
        raise ValueError(f"least squares needs at least n+1 = {n + 1} pairs, got {p}")
    H = affine_system(X)
    theta = np.linalg.pinv(H, rcond=rtol) @ Y.reshape(-1)
    R, r = _split(theta, n)
    return AttackResult(R, r, _fit_residual(R, r, X, Y), numerical_rank(H, rtol), rtol)


def pairs_from_trace(x: np.ndarray, y: np.ndarray, idx: Optional[Sequence[int]] = None):
    idx = range(len(x)) if idx is None else idx
    return [PlaintextCiphertextPair(x[k], y[k]) for k in idx]


# Known-plant attack ---------------------------------------------------------

def identify_plant_maps(dy, dz, dy_next, rtol: float = RANK_RTOL) -> PlantIdentification:
    """Fit ``dy_next[k] = V dy[k] + W dz[k]`` over the supplied difference triples.

    With exactly n+m triples the system is square; more triples give the
    least-squares fit.  Too few or too weakly excited triples raise NeedMoreData.
    """
    dy = np.atleast_2d(np.asarray(dy, dtype=float))
    dz = np.atleast_2d(np.asarray(dz, dtype=float))
    dy_next = np.atleast_2d(np.asarray(dy_next, dtype=float))
    p, n = dy.shape
    m = dz.shape[1]
    if dz.shape[0] != p or dy_next.shape != (p, n):
        raise ValueError("difference sequences have inconsistent lengths")
    eye = np.eye(n)
    G = np.vstack([np.hstack([np.kron(dy[k], eye), np.kron(dz[k], eye)]) for k in range(p)])
    unknowns = n * (n + m)
    rank = numerical_rank(G, rtol) if G.size else 0
    if rank < unknowns:
        raise NeedMoreData(
            f"difference system has rank {rank} < {unknowns}; need at least n+m = {n + m} "
            "sufficiently excited steps"
        )
    theta, *_ = np.linalg.lstsq(G, dy_next.reshape(-1), rcond=None)
    V = unvec(theta[: n * n], n)
    W = unvec(theta[n * n:], n)
    resid = dy_next - dy @ V.T - dz @ W.T
    return PlantIdentification(V, W, float(np.sqrt(np.mean(resid**2))), rank)


def plant_maps_from_trace(y: np.ndarray, z: np.ndarray, rtol: float = RANK_RTOL) -> PlantIdentification:
    """Identify (V, W) from consecutive ciphertexts y(0..T), z(0..T-1)."""
    dy = np.diff(np.asarray(y, dtype=float), axis=0)
    dz = np.diff(np.asarray(z, dtype=float), axis=0)
    p = len(dz)
    return identify_plant_maps(dy[:p], dz, dy[1 : p + 1], rtol)


def spectrum_leak(V: np.ndarray) -> np.ndarray:
    """Eigenvalues of V sorted by (real, imag); they equal those of A."""
    ev = np.linalg.eigvals(np.atleast_2d(V)).astype(complex)
    return ev[np.lexsort((ev.imag, ev.real))]


def sylvester_operator(V: np.ndarray, A: np.ndarray) -> np.ndarray:
    n = V.shape[0]
    eye = np.eye(n)
    return np.kron(eye, V) - np.kron(A.T, eye)


def sylvester_nullspace(V: np.ndarray, A: np.ndarray, tol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the solutions of ``V X - X A = 0`` in vec form."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    M = sylvester_operator(V, A)
    _, s, Vh = np.linalg.svd(M)
    # scale by ||V|| + ||A|| rather than s[0]: when V equals A up to roundoff
    # the whole operator is noise and every direction is a null direction
    scale = max(s[0], np.linalg.norm(V, 2) + np.linalg.norm(A, 2))
    rank = int(np.sum(s > tol * scale)) if scale > 0 else 0
    N = Vh[rank:].T
    if N.shape[1] == 0:
        raise TrivialNullspace(
            f"smallest singular value {s[-1]:.3g} above tolerance; V and A share no eigenvalues"
        )
    return N


def recover_key_from_nullspace(N: np.ndarray, dx, dy, rtol: float = RANK_RTOL) -> np.ndarray:
    """Pick the null-space element that maps plaintext difference dx to ciphertext difference dy.

    ``dx``/``dy`` may be single vectors or (n, q) arrays of q difference
    columns when one pair leaves the coefficients underdetermined.
    """
    N = np.atleast_2d(np.asarray(N, dtype=float))
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    if dx.ndim == 1:
        dx, dy = dx[:, None], dy[:, None]
    n = dx.shape[0]
    if N.shape[0] != n * n:
        raise ValueError(f"null-space basis has {N.shape[0]} rows, expected {n * n}")
    if np.any(np.all(dx == 0, axis=0)):
        raise ZeroDifference("plaintext difference must be nonzero")
    eye = np.eye(n)
    G = np.vstack([np.kron(dx[:, j], eye) @ N for j in range(dx.shape[1])])
    d = N.shape[1]
    rank = numerical_rank(G, rtol)
    if rank < d:
        raise UnderdeterminedAlpha(
            f"coefficient system has rank {rank} < {d}; supply another plaintext difference"
        )
    alpha, *_ = np.linalg.lstsq(G, dy.reshape(-1, order="F"), rcond=None)
    return unvec(N @ alpha, n)


def recover_offset_and_states(R_hat: np.ndarray, pair, ys, A: np.ndarray):
    """Offset from one pair, then every plaintext and applied input B u(k)."""
    if not isinstance(pair, PlaintextCiphertextPair):
        pair = PlaintextCiphertextPair(*pair)
    R_hat = np.atleast_2d(np.asarray(R_hat, dtype=float))
    if not is_invertible(R_hat):
        raise SingularKey("recovered key is not invertible")
    r_hat = pair.y - R_hat @ pair.x
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    xs = np.linalg.solve(R_hat, (ys - r_hat).T).T
    Bus = xs[1:] - xs[:-1] @ np.atleast_2d(A).T
    return r_hat, xs, Bus


@dataclass(frozen=True, eq=False)
class KnownPlantResult:
    identification: PlantIdentification
    eigenvalues: np.ndarray
    nullspace: np.ndarray
    R_hat: np.ndarray
    r_hat: np.ndarray
    xs: np.ndarray
    Bus: np.ndarray


def known_plant_attack(y, z, A, k: int, x_k, x_k1, tol: float = RANK_RTOL) -> KnownPlantResult:
    """Full pipeline from ciphertext streams, the plant matrix and plaintexts x(k), x(k+1)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    ident = plant_maps_from_trace(y, z)
    eig = spectrum_leak(ident.V)
    N = sylvester_nullspace(ident.V, A, tol)
    x_k = np.atleast_1d(np.asarray(x_k, dtype=float))
    x_k1 = np.atleast_1d(np.asarray(x_k1, dtype=float))
    R_hat = recover_key_from_nullspace(N, x_k1 - x_k, y[k + 1] - y[k])
    r_hat, xs, Bus = recover_offset_and_states(R_hat, (x_k, y[k]), y, A)
    return KnownPlantResult(ident, eig, N, R_hat, r_hat, xs, Bus)
