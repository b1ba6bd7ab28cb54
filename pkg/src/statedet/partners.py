"""Pauli partners: states that share every measured distribution.

Partners are found numerically by reconstructing from many random starts and
clustering the limits, and, for spin 1 measured along x, y and z, built in
closed form.
"""
from __future__ import annotations

import csv
import io
from functools import lru_cache
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import TOL, canonicalize, ray_distance, state_to_json
from .imposition import ImpositionData, born_distribution
from .observables import OrthonormalBasis, _is_prime, angular_momentum_basis
from .reconstruct import ReconstructionConfig, reconstruct

__all__ = [
    "Cluster",
    "PartnerSet",
    "JState3",
    "J_CONDITIONS",
    "cluster_rays",
    "enumerate_partners",
    "pathological_expected_count",
    "j_bases",
    "j_distributions",
    "j_partner_conditions",
    "j_partner_construct",
    "J_SURFACES",
    "sample_on_surface",
]


@dataclass
class Cluster:
    members: list[int]
    representative: np.ndarray


def cluster_rays(states: Sequence, tol: float = TOL.cluster) -> list[Cluster]:
    """Single-linkage clustering of rays under the ray distance.

    Clusters are ordered by their lowest member index, and that member
    (canonicalized) is the representative.
    """
    if len(states) == 0:
        raise ValueError("nothing to cluster")
    vs = [np.asarray(s, dtype=complex) for s in states]
    parent = list(range(len(vs)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            if ray_distance(vs[i], vs[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(len(vs)):
        groups.setdefault(find(i), []).append(i)
    return [Cluster(m, canonicalize(vs[m[0]])) for _, m in sorted(groups.items(), key=lambda kv: kv[1][0])]


@dataclass
class PartnerSet:
    """Distinct rays reached by reconstruction from many random starts."""

    representatives: list[np.ndarray]
    hit_counts: list[int]
    pairwise_distances: np.ndarray
    max_residuals: list[float]
    trials: int
    failures: int
    cluster_tol: float = TOL.cluster
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.representatives)

    @property
    def verified(self) -> bool:
        """Every representative reproduces every measured distribution within 1e-8."""
        return all(r <= TOL.partner_distribution for r in self.max_residuals)

    def to_dict(self) -> dict:
        return {
            "count": len(self),
            "trials": self.trials,
            "failures": self.failures,
            "cluster_tol": self.cluster_tol,
            "verified": self.verified,
            "representatives": [state_to_json(r) for r in self.representatives],
            "hit_counts": list(self.hit_counts),
            "max_residuals": list(self.max_residuals),
            "pairwise_distances": np.asarray(self.pairwise_distances).tolist(),
            **self.diagnostics,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["partner_id", "hits", "max_residual"])
        for i, (h, r) in enumerate(zip(self.hit_counts, self.max_residuals)):
            w.writerow([i, h, f"{r:.12g}"])
        return buf.getvalue()


def enumerate_partners(
    data_set: Sequence[ImpositionData],
    trials: int,
    config: ReconstructionConfig | None = None,
    *,
    cluster_tol: float = TOL.cluster,
) -> PartnerSet:
    """Reconstruct from ``trials`` independent random starts and cluster the
    converged limits. Trial ``i`` draws from ``config.rng.child(i)``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    config = config or ReconstructionConfig()
    converged = []
    restarts = []
    for i in range(trials):
        result = reconstruct(data_set, replace(config, rng=config.rng.child(i)))
        restarts.append(result.restarts_used)
        if result.converged:
            converged.append(result.final_state)
    failures = trials - len(converged)
    diagnostics = {"restarts_total": int(sum(restarts)), "first_start_failures": int(sum(r > 0 for r in restarts))}
    if not converged:
        return PartnerSet([], [], np.zeros((0, 0)), [], trials, failures, cluster_tol, diagnostics)

    clusters = cluster_rays(converged, cluster_tol)
    reps = [c.representative for c in clusters]
    dists = np.array([[ray_distance(a, b) for b in reps] for a in reps])
    max_res = [
        float(max(np.max(np.abs(born_distribution(d.basis, r) - d.probs)) for d in data_set)) for r in reps
    ]
    return PartnerSet(reps, [len(c.members) for c in clusters], dists, max_res, trials, failures, cluster_tol, diagnostics)


def pathological_expected_count(N: int, M: int) -> int:
    """N (N + 1 - M): states sharing uniform distributions over M of the N + 1
    mutually unbiased bases of a prime dimension N."""
    if not _is_prime(N):
        raise ValueError(f"N must be prime, got {N}")
    if not 1 <= M <= N + 1:
        raise ValueError(f"M must lie in 1..{N + 1}, got {M}")
    return N * (N + 1 - M)


# ---------------------------------------------------------------------------
# spin 1, measured along x, y, z
#
# Components are taken in the J_z eigenbasis ordered m = 1, 0, -1 with
# J_x = (J+ + J-)/2 and J_y = (J+ - J-)/2i built from the standard ladder
# elements sqrt(2). The closed forms below hold in this convention only.

J_CONDITIONS = ("re_a_eq_neg_re_c", "im_a_eq_im_c", "abs_a_eq_abs_c", "im_ac_zero")


@dataclass(frozen=True)
class JState3:
    """Spin-1 state (a, b, c) in the J_z basis, global phase fixed so b >= 0."""

    a: complex
    b: float
    c: complex

    def __post_init__(self):
        if self.b < 0 or abs(complex(self.b).imag) > 0:
            raise ValueError("b must be real and nonnegative")
        n = abs(self.a) ** 2 + self.b**2 + abs(self.c) ** 2
        if abs(n - 1.0) > TOL.norm:
            raise ValueError(f"|a|^2 + b^2 + |c|^2 = {n!r}, not 1")

    @classmethod
    def from_vector(cls, v) -> "JState3":
        """Normalize and rotate the global phase so the middle component is
        real nonnegative."""
        v = np.asarray(v, dtype=complex)
        if v.shape != (3,):
            raise ValueError("a spin-1 state has three components")
        v = v / np.linalg.norm(v)
        if abs(v[1]) > 0:
            v = v * (abs(v[1]) / v[1])
        return cls(complex(v[0]), float(abs(v[1])), complex(v[2]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=complex)


@lru_cache(maxsize=1)
def j_bases() -> tuple[OrthonormalBasis, OrthonormalBasis, OrthonormalBasis]:
    return tuple(angular_momentum_basis(3, n) for n in ((1, 0, 0), (0, 1, 0), (0, 0, 1)))


def j_distributions(s) -> np.ndarray:
    """Concatenated J_x, J_y, J_z distributions of a spin-1 state."""
    v = s.vector if isinstance(s, JState3) else np.asarray(s, dtype=complex)
    return np.concatenate([born_distribution(b, v) for b in j_bases()])


def j_partner_conditions(s: JState3, tol: float = TOL.j_condition) -> set[str]:
    """Which of the four sufficient conditions for a spin-1 partner hold."""
    a, c = s.a, s.c
    checks = {
        "re_a_eq_neg_re_c": abs(a.real + c.real),
        "im_a_eq_im_c": abs(a.imag - c.imag),
        "abs_a_eq_abs_c": abs(abs(a) - abs(c)),
        "im_ac_zero": abs((a * c).imag),
    }
    return {name for name, gap in checks.items() if gap <= tol}


def _renorm(a: complex, b: float, c: complex) -> JState3:
    n = np.sqrt(abs(a) ** 2 + b**2 + abs(c) ** 2)
    return JState3(complex(a / n), float(b / n), complex(c / n))


def j_partner_construct(s: JState3, tol: float = TOL.j_condition) -> list[JState3]:
    """Closed-form Pauli partners of a spin-1 state for J_x, J_y, J_z.

    * b = 0: with a made real and positive, the partner is (a, 0, c*).
    * a* + c = 0: three partners (a', b, -a'*) with a' in {-a, a*, -a*}.
    * otherwise, when one of :data:`J_CONDITIONS` holds:
      a' = a* (a + c*)/(a* + c), c' = c* (a* + c)/(a + c*).

    Raises:
        ValueError: in the generic regime when no condition holds.
    """
    a, b, c = s.a, s.b, s.c
    if b <= tol:
        if abs(a) > tol:
            ph = abs(a) / a
            a, c = a * ph, c * ph
        return [_renorm(complex(abs(a)), 0.0, np.conj(c))]
    if abs(np.conj(a) + c) <= tol:
        return [_renorm(ap, b, -np.conj(ap)) for ap in (-a, np.conj(a), -np.conj(a))]
    if not j_partner_conditions(s, tol):
        raise ValueError(
            "no partner in closed form: b > 0 and a* + c != 0, but none of "
            "Re a = -Re c, Im a = Im c, |a| = |c|, Im(ac) = 0 holds"
        )
    ratio = (a + np.conj(c)) / (np.conj(a) + c)
    return [_renorm(np.conj(a) * ratio, b, np.conj(c) / ratio)]


J_SURFACES = J_CONDITIONS + ("b_zero", "a_conj_plus_c_zero")


def sample_on_surface(surface: str, rng: np.random.Generator) -> JState3:
    """Random spin-1 state on one of the partner surfaces of :data:`J_SURFACES`.

    Draws Gaussian a, c and |b|, then overwrites just enough of them to land
    on the surface. Every constraint is invariant under positive rescaling,
    so normalizing afterwards keeps the state on the surface.
    """
    a, c = (complex(*rng.standard_normal(2)) for _ in range(2))
    b = abs(float(rng.standard_normal()))
    if surface == "re_a_eq_neg_re_c":
        c = complex(-a.real, c.imag)
    elif surface == "im_a_eq_im_c":
        c = complex(c.real, a.imag)
    elif surface == "abs_a_eq_abs_c":
        c = abs(a) * c / abs(c)
    elif surface == "im_ac_zero":
        c = abs(c) * np.conj(a) / abs(a) * (1 if rng.random() < 0.5 else -1)
    elif surface == "b_zero":
        b = 0.0
    elif surface == "a_conj_plus_c_zero":
        c = -np.conj(a)
    else:
        raise ValueError(f"unknown surface {surface!r}; expected one of {J_SURFACES}")
    return _renorm(a, b, complex(c))
