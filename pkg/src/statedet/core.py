"""State vectors, the ray metric and the numerical plumbing shared by every
other module.

State vectors are plain one-dimensional complex ``numpy`` arrays. Functions
that receive them validate the unit-norm invariant through :func:`as_state`
and never mutate their inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

__all__ = [
    "TOL",
    "Tolerances",
    "DimensionError",
    "RandomSource",
    "as_generator",
    "as_state",
    "inner",
    "ray_distance",
    "induced_distance",
    "canonicalize",
    "random_state",
    "hermitian_eigenbasis",
    "state_to_json",
    "state_from_json",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used across the package."""

    norm: float = 1e-12
    orthonormality: float = 1e-10
    hermitian: float = 1e-10
    eigensolver: float = 1e-9
    canonical_phase: float = 1e-10
    zero_coefficient: float = 1e-14
    unbiased: float = 1e-8
    simplex: float = 1e-10
    direction: float = 1e-10
    j_condition: float = 1e-10
    cluster: float = 1e-6
    partner_distribution: float = 1e-8


TOL = Tolerances()


class DimensionError(ValueError):
    """Raised when objects living in different Hilbert spaces are combined."""


@dataclass(frozen=True)
class RandomSource:
    """Seeded, reproducible source of random numbers.

    The generator is numpy's PCG64 seeded through ``SeedSequence(seed,
    spawn_key=(stream, *substream))``. Identical ``(seed, stream, substream)``
    triples reproduce identical draws; distinct streams are statistically
    independent, which is what parallel trials should rely on.
    """

    seed: int
    stream: int = 0
    substream: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stream < 0 or any(k < 0 for k in self.substream):
            raise ValueError("stream indices must be nonnegative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self.substream))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, index: int) -> "RandomSource":
        """Independent sub-stream, e.g. one per trial of a batch."""
        return replace(self, substream=self.substream + (int(index),))

    def to_dict(self) -> dict:
        return {"seed": self.seed, "stream": self.stream, "substream": list(self.substream)}


RandomLike = Union[RandomSource, np.random.Generator, int]


def as_generator(rng: RandomLike) -> np.random.Generator:
    """Accept a RandomSource, a numpy Generator, or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RandomSource(int(rng)).generator()
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")


def as_state(s, *, dim: int | None = None, name: str = "state") -> np.ndarray:
    """Validate ``s`` as a unit-norm complex vector and return it as an array."""
    v = np.asarray(s, dtype=complex)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if v.size < 2:
        raise ValueError(f"{name} must have dimension >= 2, got {v.size}")
    if dim is not None and v.size != dim:
        raise DimensionError(f"{name} has dimension {v.size}, expected {dim}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > TOL.norm:
        raise ValueError(f"{name} is not normalized (norm {norm!r})")
    return v


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_state(a, name="a")
    b = as_state(b, name="b")
    if a.size != b.size:
        raise DimensionError(f"incompatible spaces: dimension {a.size} vs {b.size}")
    return a, b


def inner(a, b) -> complex:
    """Inner product <a, b>, antilinear in the first argument."""
    return complex(np.vdot(a, b))


def ray_distance(a, b) -> float:
    """Distance between the rays of ``a`` and ``b``: sqrt(2) sqrt(1 - |<a,b>|).

    Equal to the minimum of ``||e^{ia} a - e^{ib} b||`` over both phases, so it
    vanishes for vectors that differ only by a global phase.
    """
    a, b = _pair(a, b)
    ov = np.vdot(a, b)
    overlap = abs(ov)
    if overlap < 0.5:
        return float(np.sqrt(2.0) * np.sqrt(1.0 - overlap))
    # Near coincidence 1 - |<a,b>| cancels catastrophically (floor ~1e-8); the
    # phase-aligned difference has the same value and full relative accuracy.
    # Averaging both orders keeps the result exactly symmetric.
    u = ov / overlap
    return float(0.5 * (np.linalg.norm(a * u - b) + np.linalg.norm(b * np.conj(u) - a)))


def induced_distance(a, b) -> float:
    """Norm distance ``||a - b||`` between two representatives."""
    a, b = _pair(a, b)
    return float(np.linalg.norm(a - b))


def canonicalize(s) -> np.ndarray:
    """Return the representative of the ray of ``s`` whose first significant
    coefficient (modulus above 1e-10) is real and nonnegative."""
    v = np.asarray(s, dtype=complex)
    if v.ndim == 1 and v.size and not np.any(np.abs(v) > 0):
        raise ValueError("cannot canonicalize the zero vector")
    v = as_state(v)
    pivot = int(np.argmax(np.abs(v) > TOL.canonical_phase))
    c = v[pivot]
    out = v * (abs(c) / c)
    out[pivot] = abs(c)
    out.setflags(write=False)
    return out


def random_state(dim: int, rng: RandomLike) -> np.ndarray:
    """Haar-random unit vector: i.i.d. standard normal real and imaginary
    parts, then normalized."""
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    gen = as_generator(rng)
    z = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return z / np.linalg.norm(z)


def hermitian_eigenbasis(H, *, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a small dense Hermitian matrix with cyclic complex Jacobi
    rotations.

    Returns ``(eigenvalues, vectors)`` with eigenvalues ascending and the
    eigenvectors as canonicalized columns of ``vectors``.

    Raises:
        ValueError: if ``H`` is not square or not Hermitian within 1e-10.
    """
    A = np.array(H, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.max(np.abs(A - A.conj().T), initial=0.0) > TOL.hermitian:
        raise ValueError("matrix is not Hermitian")
    n = A.shape[0]
    A = 0.5 * (A + A.conj().T)
    V = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(A), 1e-300)

    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.linalg.norm(A[offdiag]) <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = abs(A[p, q])
                if g <= 1e-300:
                    continue
                # Unit phase turns the (p, q) block real symmetric, then a real
                # rotation annihilates it.
                phase = A[p, q] / g
                tau = (A[q, q].real - A[p, p].real) / (2.0 * g)
                t = np.copysign(1.0, tau) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q] * np.conj(phase)
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :] * phase
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q] * np.conj(phase)
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise RuntimeError("Jacobi eigensolver did not converge")

    evals = np.diag(A).real
    order = np.argsort(evals, kind="stable")
    vectors = np.column_stack([canonicalize(V[:, k] / np.linalg.norm(V[:, k])) for k in order])
    return evals[order], vectors


def state_to_json(s) -> list[list[float]]:
    """Serialize a state as a list of ``[re, im]`` pairs."""
    v = as_state(s)
    return [[float(z.real), float(z.imag)] for z in v]


def state_from_json(pairs: Union[str, Sequence[Sequence[float]]]) -> np.ndarray:
    """Inverse of :func:`state_to_json`; re-validates the norm."""
    if isinstance(pairs, str):
        pairs = json.loads(pairs)
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("a serialized state must be a list of [re, im] pairs")
    return as_state(arr[:, 0] + 1j * arr[:, 1])
