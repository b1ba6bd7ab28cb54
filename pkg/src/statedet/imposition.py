"""Born distributions and the operators that impose measured moduli (or known
phases) on a state."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .core import TOL, DimensionError, as_state
from .observables import OrthonormalBasis, build_observable, parse_observable

__all__ = [
    "ImpositionData",
    "born_distribution",
    "impose_distribution",
    "impose_phases",
    "post_imposition_bound",
    "validate_distribution",
    "load_distributions",
    "distributions_from_json",
    "distributions_to_json",
]


def validate_distribution(probs: Sequence[float], dim: int | None = None) -> np.ndarray:
    """Check the simplex invariant and return the probabilities as an array.

    Entries down to -1e-10 are tolerated as rounding and clipped to zero.
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1:
        raise ValueError("a probability distribution must be a flat list")
    if dim is not None and p.size != dim:
        raise DimensionError(f"distribution has {p.size} entries, expected {dim}")
    if not np.all(np.isfinite(p)) or np.min(p) < -TOL.simplex:
        raise ValueError("probabilities must be finite and nonnegative")
    if abs(p.sum() - 1.0) > TOL.simplex:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return np.clip(p, 0.0, None)


def born_distribution(basis: OrthonormalBasis, s) -> np.ndarray:
    """Probabilities |<phi_k, s>|^2 of the eigenvalues of ``basis`` in state ``s``."""
    return np.abs(basis.coefficients(s)) ** 2


@dataclass(frozen=True, eq=False)
class ImpositionData:
    """An observable's eigenbasis paired with the measured moduli sqrt(p_k).

    This is everything the reconstruction knows about the unknown state for
    one observable.
    """

    basis: OrthonormalBasis
    target_moduli: np.ndarray

    def __post_init__(self):
        m = np.array(self.target_moduli, dtype=float)
        if m.shape != (self.basis.dim,):
            raise DimensionError(f"{m.size} moduli for a basis of dimension {self.basis.dim}")
        if np.min(m) < 0:
            raise ValueError("target moduli must be nonnegative")
        if abs(np.sum(m**2) - 1.0) > TOL.simplex:
            raise ValueError("squared target moduli must sum to 1")
        m.setflags(write=False)
        object.__setattr__(self, "target_moduli", m)

    @classmethod
    def from_probs(cls, basis: OrthonormalBasis, probs: Sequence[float]) -> "ImpositionData":
        return cls(basis, np.sqrt(validate_distribution(probs, basis.dim)))

    @classmethod
    def from_state(cls, basis: OrthonormalBasis, state) -> "ImpositionData":
        """Data generated by measuring ``basis`` on a known state."""
        return cls(basis, np.abs(basis.coefficients(as_state(state, dim=basis.dim))))

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def probs(self) -> np.ndarray:
        return self.target_moduli**2


def _unit_phases(c: np.ndarray) -> np.ndarray:
    """c/|c| elementwise, with phase 1 wherever |c| <= 1e-14."""
    mod = np.abs(c)
    small = mod <= TOL.zero_coefficient
    return np.where(small, 1.0 + 0j, c / np.where(small, 1.0, mod))


def impose_distribution(data: ImpositionData, s) -> np.ndarray:
    """Physical imposition: keep the phases of ``s`` in the basis, replace its
    moduli with the measured ones.

    ``sum_k m_k (c_k/|c_k|) phi_k`` with ``c_k = <phi_k, s>`` and phase 1 for
    vanishing coefficients. Idempotent; every state already reproducing the
    distribution is a fixed point.
    """
    c = data.basis.coefficients(as_state(s, dim=data.dim))
    out = data.basis.matrix @ (data.target_moduli * _unit_phases(c))
    return out / np.linalg.norm(out)


def impose_phases(basis: OrthonormalBasis, phase_source, s) -> np.ndarray:
    """Phase imposition: keep the moduli of ``s`` in the basis, take the
    phases from ``phase_source``.

    Needs the target state itself, so it only serves diagnostic studies.
    """
    s = as_state(s, dim=basis.dim)
    ref = as_state(phase_source, dim=basis.dim, name="phase_source")
    out = basis.matrix @ (np.abs(basis.coefficients(s)) * _unit_phases(basis.coefficients(ref)))
    return out / np.linalg.norm(out)


def post_imposition_bound(data: ImpositionData) -> float:
    """Upper bound 2 sqrt(2) sqrt(1 - max_k m_k) on the ray distance between
    the imposed state and any state producing the data."""
    return float(2.0 * np.sqrt(2.0) * np.sqrt(max(0.0, 1.0 - float(np.max(data.target_moduli)))))


# ---------------------------------------------------------------------------
# distribution files

def distributions_from_json(entries: Union[dict, list], dim: int | None = None) -> list[ImpositionData]:
    """Build imposition data from decoded JSON.

    Each entry is ``{"basis": <spec string or list of vectors>, "probs": [...]}``
    where explicit vectors are lists of ``[re, im]`` pairs. A single object is
    accepted as a one-element list.
    """
    if isinstance(entries, dict):
        entries = [entries]
    if not isinstance(entries, list) or not entries:
        raise ValueError("expected a nonempty list of {basis, probs} objects")
    out = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "basis" not in entry or "probs" not in entry:
            raise ValueError(f"entry {i}: expected an object with 'basis' and 'probs'")
        probs = entry["probs"]
        n = dim if dim is not None else len(probs)
        spec = entry["basis"]
        if isinstance(spec, str):
            basis = build_observable(parse_observable(spec, n))
        else:
            basis = OrthonormalBasis.from_json(spec, entry.get("labels", ()))
        try:
            out.append(ImpositionData.from_probs(basis, probs))
        except ValueError as exc:
            raise type(exc)(f"entry {i}: {exc}") from None
    dims = {d.dim for d in out}
    if len(dims) != 1:
        raise DimensionError(f"inconsistent dimensions across observables: {sorted(dims)}")
    return out


def load_distributions(path: Union[str, Path]) -> list[ImpositionData]:
    with open(path) as fh:
        return distributions_from_json(json.load(fh))


def distributions_to_json(data_set: Sequence[ImpositionData], specs: Sequence[str] | None = None) -> list[dict]:
    """Inverse of :func:`distributions_from_json`. Without ``specs`` the bases
    are written out explicitly."""
    out = []
    for i, data in enumerate(data_set):
        basis = specs[i] if specs is not None else data.basis.to_json()
        out.append({"basis": basis, "probs": [float(p) for p in data.probs]})
    return out
