"""Orthonormal eigenbases that stand in for measured observables."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    TOL,
    DimensionError,
    RandomLike,
    RandomSource,
    as_generator,
    as_state,
    hermitian_eigenbasis,
)

__all__ = [
    "OrthonormalBasis",
    "ObservableSpec",
    "UnsupportedDimensionError",
    "standard_basis",
    "fourier_basis",
    "random_basis",
    "mub_family",
    "spin_matrices",
    "angular_momentum_basis",
    "sum_observable_basis",
    "unbiasedness_check",
    "parse_observable",
    "build_observable",
]


class UnsupportedDimensionError(ValueError):
    """The requested construction does not exist in this dimension."""


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Eigenbasis of a nondegenerate observable.

    ``matrix`` holds the basis vectors as columns. ``labels`` are the
    eigenvalues; they are carried as metadata and never enter the imposition
    arithmetic.
    """

    matrix: np.ndarray
    labels: tuple[float, ...] = ()
    name: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError(f"basis matrix must be square with dim >= 2, got {m.shape}")
        gram = m.conj().T @ m
        err = np.max(np.abs(gram - np.eye(m.shape[0])))
        if err > TOL.orthonormality:
            raise ValueError(f"basis vectors are not orthonormal (max Gram error {err:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        labels = tuple(float(x) for x in self.labels) if len(self.labels) else tuple(
            float(k) for k in range(m.shape[0])
        )
        if len(labels) != m.shape[0]:
            raise ValueError("need exactly one label per basis vector")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def vectors(self) -> list[np.ndarray]:
        return [self.matrix[:, k] for k in range(self.dim)]

    def coefficients(self, s) -> np.ndarray:
        """Expansion coefficients <phi_k, s>."""
        v = np.asarray(s, dtype=complex)
        if v.shape != (self.dim,):
            raise DimensionError(f"state of dimension {v.size} used with a basis of dimension {self.dim}")
        return self.matrix.conj().T @ v

    def operator(self) -> np.ndarray:
        """The Hermitian operator sum_k label_k |phi_k><phi_k|."""
        m = self.matrix
        return (m * np.asarray(self.labels)) @ m.conj().T

    def to_json(self) -> list[list[list[float]]]:
        return [[[float(z.real), float(z.imag)] for z in v] for v in self.vectors]

    @classmethod
    def from_json(cls, vectors, labels: Sequence[float] = ()) -> "OrthonormalBasis":
        vs = [as_state(np.asarray(v, float)[:, 0] + 1j * np.asarray(v, float)[:, 1], name="basis vector")
              for v in vectors]
        return cls(np.column_stack(vs), tuple(labels), name="explicit")


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {dim}")
    return int(dim)


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, int(n**0.5) + 1))


def standard_basis(dim: int) -> OrthonormalBasis:
    dim = _check_dim(dim)
    return OrthonormalBasis(np.eye(dim, dtype=complex), name="standard")


def fourier_basis(dim: int) -> OrthonormalBasis:
    """Discrete Fourier basis, (f_r)_k = exp(2 pi i k r / N) / sqrt(N)."""
    dim = _check_dim(dim)
    k = np.arange(dim)
    m = np.exp(2j * np.pi * np.outer(k, k) / dim) / np.sqrt(dim)
    return OrthonormalBasis(m, name="fourier")


def random_basis(dim: int, rng: RandomLike, *, max_attempts: int = 10) -> OrthonormalBasis:
    """Haar-distributed orthonormal basis.

    Gram-Schmidt on Haar-random vectors; each new vector is normalized by a
    real positive factor, i.e. the triangular factor has a positive diagonal,
    which is what makes the result Haar distributed.
    """
    dim = _check_dim(dim)
    gen = as_generator(rng)
    for _ in range(max_attempts):
        z = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
        q = np.zeros_like(z)
        for k in range(dim):
            v = z[:, k].copy()
            for _ in range(2):  # second pass restores orthogonality lost to rounding
                v -= q[:, :k] @ (q[:, :k].conj().T @ v)
            norm = np.linalg.norm(v)
            if norm < 1e-8 * np.linalg.norm(z[:, k]):
                break
            q[:, k] = v / norm
        else:
            return OrthonormalBasis(q, name="random")
    raise RuntimeError(f"random_basis: {max_attempts} numerically dependent draws in a row")


def mub_family(dim: int) -> list[OrthonormalBasis]:
    """Complete set of dim + 1 mutually unbiased bases for prime ``dim``.

    For odd primes: the standard basis followed by the bases with vectors
    (v_r)_k = w^(m k^2 + r k) / sqrt(N), w = exp(2 pi i / N), m = 0..N-1
    (m = 0 is the Fourier basis). For dim 2: eigenbases of Z, X and Y.
    """
    dim = _check_dim(dim)
    if not _is_prime(dim):
        raise UnsupportedDimensionError(
            f"mutually unbiased bases are only constructed for prime dimensions, got {dim}"
        )
    if dim == 2:
        s = 1 / np.sqrt(2)
        return [
            standard_basis(2),
            OrthonormalBasis(np.array([[s, s], [s, -s]], dtype=complex), name="mub:1"),
            OrthonormalBasis(np.array([[s, s], [1j * s, -1j * s]]), name="mub:2"),
        ]
    k = np.arange(dim)
    bases = [standard_basis(dim)]
    for m in range(dim):
        exponent = (m * k[:, None] ** 2 + np.outer(k, k)) % dim
        mat = np.exp(2j * np.pi * exponent / dim) / np.sqrt(dim)
        bases.append(OrthonormalBasis(mat, name=f"mub:{m + 1}"))
    return bases


def spin_matrices(dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin j = (dim - 1)/2 matrices (J_x, J_y, J_z) in the basis m = j, j-1, ..., -j.

    J_+ has superdiagonal elements sqrt(j(j+1) - m(m+1)); J_x = (J_+ + J_-)/2
    and J_y = (J_+ - J_-)/(2i).
    """
    dim = _check_dim(dim)
    j = (dim - 1) / 2
    m = j - np.arange(dim)
    jplus = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    jminus = jplus.conj().T
    return (jplus + jminus) / 2, (jplus - jminus) / 2j, np.diag(m).astype(complex)


def angular_momentum_basis(dim: int, direction: Sequence[float]) -> OrthonormalBasis:
    """Eigenbasis of n.J for the unit vector ``direction``; labels are the
    eigenvalues -j..j in ascending order."""
    n = np.asarray(direction, dtype=float)
    if n.shape != (3,):
        raise ValueError("direction must be a 3-vector")
    if abs(np.linalg.norm(n) - 1.0) > TOL.direction:
        raise ValueError(f"direction must be a unit vector, got norm {np.linalg.norm(n)!r}")
    jx, jy, jz = spin_matrices(dim)
    evals, vecs = hermitian_eigenbasis(n[0] * jx + n[1] * jy + n[2] * jz)
    return OrthonormalBasis(vecs, tuple(evals), name="jmom:{:g},{:g},{:g}".format(*n))


def sum_observable_basis(first: OrthonormalBasis, second: OrthonormalBasis) -> OrthonormalBasis:
    """Eigenbasis of A + B, where A and B are the operators built from the two
    bases and their labels (e.g. an observable of type X + P)."""
    if first.dim != second.dim:
        raise DimensionError("bases live in different dimensions")
    evals, vecs = hermitian_eigenbasis(first.operator() + second.operator())
    if np.min(np.diff(evals)) < 1e-8:
        raise ValueError("the summed observable is degenerate")
    return OrthonormalBasis(vecs, tuple(evals), name=f"{first.name}+{second.name}")


def unbiasedness_check(b1: OrthonormalBasis, b2: OrthonormalBasis, tol: float = TOL.unbiased) -> bool:
    """True iff every overlap |<u_j, v_k>| equals 1/sqrt(N) within ``tol``."""
    if b1.dim != b2.dim:
        raise DimensionError(f"bases of dimension {b1.dim} and {b2.dim}")
    overlaps = np.abs(b1.matrix.conj().T @ b2.matrix)
    return bool(np.max(np.abs(overlaps - 1 / np.sqrt(b1.dim))) <= tol)


@dataclass(frozen=True)
class ObservableSpec:
    """Textual description of an observable, as used on the command line.

    Recognized forms: ``standard``, ``fourier``, ``random:<seed>``,
    ``mub:<index>``, ``jmom:<nx>,<ny>,<nz>`` and ``xp`` (eigenbasis of the
    sum of the standard and Fourier observables with labels 0..N-1).
    """

    kind: str
    dim: int
    seed: Optional[int] = None
    index: Optional[int] = None
    direction: Optional[tuple[float, float, float]] = None

    def __str__(self) -> str:
        if self.kind == "random":
            return f"random:{self.seed}"
        if self.kind == "mub":
            return f"mub:{self.index}"
        if self.kind == "jmom":
            return "jmom:" + ",".join(repr(x) for x in self.direction)
        return self.kind

    def build(self) -> OrthonormalBasis:
        return build_observable(self)


def parse_observable(text: str, dim: int) -> ObservableSpec:
    """Parse an observable string. ``jmom`` directions are normalized here so
    that users may type e.g. ``jmom:1,1,0``."""
    dim = _check_dim(dim)
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind in ("standard", "fourier", "xp") and not arg:
            return ObservableSpec(kind, dim)
        if kind == "random":
            return ObservableSpec(kind, dim, seed=int(arg))
        if kind == "mub":
            idx = int(arg)
            if idx < 0 or idx > dim:
                raise ValueError(f"mub index must be in 0..{dim}")
            return ObservableSpec(kind, dim, index=idx)
        if kind == "jmom":
            n = np.array([float(x) for x in arg.split(",")])
            if n.shape != (3,) or not np.linalg.norm(n) > 0:
                raise ValueError("jmom needs a nonzero direction nx,ny,nz")
            n = n / np.linalg.norm(n)
            return ObservableSpec(kind, dim, direction=tuple(float(x) for x in n))
    except ValueError as exc:
        raise ValueError(f"bad observable spec {text!r}: {exc}") from None
    raise ValueError(f"unknown observable spec {text!r}")


def build_observable(spec: ObservableSpec) -> OrthonormalBasis:
    if spec.kind == "standard":
        return standard_basis(spec.dim)
    if spec.kind == "fourier":
        return fourier_basis(spec.dim)
    if spec.kind == "random":
        basis = random_basis(spec.dim, RandomSource(spec.seed))
        return OrthonormalBasis(basis.matrix, name=str(spec))
    if spec.kind == "mub":
        return mub_family(spec.dim)[spec.index]
    if spec.kind == "jmom":
        return angular_momentum_basis(spec.dim, spec.direction)
    if spec.kind == "xp":
        return sum_observable_basis(standard_basis(spec.dim), fourier_basis(spec.dim))
    raise ValueError(f"unknown observable kind {spec.kind!r}")
