import numpy as np
import pytest

from statedet import RandomSource
from statedet.core import random_state, ray_distance
from statedet.imposition import ImpositionData
from statedet.observables import mub_family
from statedet.partners import (
    J_CONDITIONS,
    J_SURFACES,
    JState3,
    cluster_rays,
    enumerate_partners,
    j_distributions,
    j_partner_conditions,
    j_partner_construct,
    pathological_expected_count,
    sample_on_surface,
)
from statedet.reconstruct import ReconstructionConfig


def spin1_bases_oracle():
    """Eigenbases of J_x, J_y, J_z for spin 1 via numpy.linalg.eigh, m = 1, 0, -1."""
    r = np.sqrt(2) / 2
    jx = np.array([[0, r, 0], [r, 0, r], [0, r, 0]], dtype=complex)
    jy = np.array([[0, -1j * r, 0], [1j * r, 0, -1j * r], [0, 1j * r, 0]])
    jz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return [np.linalg.eigh(m)[1] for m in (jx, jy, jz)]


def born_oracle(v):
    return np.concatenate([np.abs(b.conj().T @ v) ** 2 for b in spin1_bases_oracle()])


class TestClusterRays:
    def test_single(self):
        assert len(cluster_rays([[1, 0]])) == 1

    def test_orthogonal(self):
        assert len(cluster_rays([[1, 0], [0, 1]])) == 2

    def test_phase_copies_merge(self):
        v = np.array([0.6, 0.8j])
        clusters = cluster_rays([v, 1j * v, -v])
        assert len(clusters) == 1 and clusters[0].members == [0, 1, 2]

    def test_noisy_copies(self):
        gen = RandomSource(3).generator()
        base = [random_state(4, gen) for _ in range(3)]
        states = []
        for k in range(30):
            v = base[k % 3] + 1e-9 * random_state(4, gen)
            states.append(v / np.linalg.norm(v) * np.exp(1j * k))
        clusters = cluster_rays(states)
        assert len(clusters) == 3
        assert [len(c.members) for c in clusters] == [10, 10, 10]

    def test_empty(self):
        with pytest.raises(ValueError):
            cluster_rays([])


class TestPathologicalCount:
    @pytest.mark.parametrize("N,M,expected", [(3, 3, 3), (3, 2, 6), (3, 4, 0), (5, 3, 15), (2, 1, 4)])
    def test_values(self, N, M, expected):
        assert pathological_expected_count(N, M) == expected

    @pytest.mark.parametrize("N,M", [(4, 2), (3, 0), (3, 5)])
    def test_invalid(self, N, M):
        with pytest.raises(ValueError):
            pathological_expected_count(N, M)


class TestJState:
    def test_norm_checked(self):
        with pytest.raises(ValueError):
            JState3(0.5, 0.5, 0.5)

    def test_negative_b(self):
        with pytest.raises(ValueError):
            JState3(0.6, -0.8, 0)

    def test_from_vector(self):
        s = JState3.from_vector(np.exp(0.7j) * np.array([0.5, 1 / np.sqrt(2), 0.5j]))
        assert s.b == pytest.approx(1 / np.sqrt(2))
        assert s.a == pytest.approx(0.5)

    def test_bases_match_oracle(self, rng):
        for _ in range(20):
            v = random_state(3, rng)
            assert np.allclose(j_distributions(v), born_oracle(v), atol=1e-12)


class TestConditions:
    def test_equal_moduli(self):
        s = JState3(0.5, 1 / np.sqrt(2), 0.5j)
        assert j_partner_conditions(s) == {"abs_a_eq_abs_c"}

    def test_real_components(self):
        s = JState3.from_vector([0.3, 0.8, 0.5])
        assert "im_a_eq_im_c" in j_partner_conditions(s)
        assert "im_ac_zero" in j_partner_conditions(s)

    def test_generic(self):
        s = JState3.from_vector([0.3 + 0.2j, 0.8, 0.1 - 0.4j])
        assert j_partner_conditions(s) == set()


class TestConstruct:
    def test_equal_moduli_example(self):
        (p,) = j_partner_construct(JState3(0.5, 1 / np.sqrt(2), 0.5j))
        assert p.a == pytest.approx(-0.5j, abs=1e-12)
        assert p.c == pytest.approx(0.5, abs=1e-12)
        assert p.b == pytest.approx(1 / np.sqrt(2))

    def test_real_state_is_self_partner(self):
        s = JState3.from_vector([0.3, 0.8, 0.5])
        (p,) = j_partner_construct(s)
        assert ray_distance(p.vector, s.vector) < 1e-12

    def test_b_zero(self):
        (p,) = j_partner_construct(JState3(0.8, 0.0, 0.6j))
        assert np.allclose(p.vector, [0.8, 0, -0.6j], atol=1e-12)

    def test_a_conj_plus_c_zero(self):
        a = 0.3 + 0.4j
        b = np.sqrt(1 - 2 * abs(a) ** 2)
        s = JState3(a, b, -np.conj(a))
        partners = j_partner_construct(s)
        assert len(partners) == 3
        for p in partners:
            assert np.max(np.abs(born_oracle(p.vector) - born_oracle(s.vector))) < 1e-12
            assert ray_distance(p.vector, s.vector) > 1e-3

    def test_generic_raises(self):
        with pytest.raises(ValueError):
            j_partner_construct(JState3.from_vector([0.3 + 0.2j, 0.8, 0.1 - 0.4j]))

    @pytest.mark.parametrize("surface", J_SURFACES)
    def test_surfaces_against_oracle(self, surface):
        gen = RandomSource(99).generator()
        for _ in range(200):
            s = sample_on_surface(surface, gen)
            if surface in J_CONDITIONS:
                assert surface in j_partner_conditions(s)
            for p in j_partner_construct(s):
                assert np.max(np.abs(born_oracle(p.vector) - born_oracle(s.vector))) <= 1e-10

    def test_unknown_surface(self):
        with pytest.raises(ValueError):
            sample_on_surface("nowhere", np.random.default_rng(0))


class TestEnumerate:
    def test_unique_state(self):
        phi = random_state(3, RandomSource(4))
        data = [ImpositionData.from_state(b, phi) for b in mub_family(3)]
        ps = enumerate_partners(data, 10, ReconstructionConfig(rng=RandomSource(5)))
        assert len(ps) == 1 and ps.verified
        assert ray_distance(ps.representatives[0], phi) < 1e-6

    def test_uniform_three_mubs(self):
        data = [ImpositionData(b, np.full(3, 3 ** -0.5)) for b in mub_family(3)[:3]]
        ps = enumerate_partners(data, 60, ReconstructionConfig(rng=RandomSource(6)))
        assert len(ps) == 3 and ps.verified
        assert sum(ps.hit_counts) + ps.failures == 60
        off = ps.pairwise_distances[~np.eye(3, dtype=bool)]
        assert np.all(off > 1e-3)

    def test_deterministic(self):
        data = [ImpositionData(b, np.full(3, 3 ** -0.5)) for b in mub_family(3)[:2]]
        config = ReconstructionConfig(rng=RandomSource(8))
        a = enumerate_partners(data, 20, config).to_dict()
        b = enumerate_partners(data, 20, config).to_dict()
        assert a == b

    def test_csv(self):
        data = [ImpositionData(b, np.full(3, 3 ** -0.5)) for b in mub_family(3)[:3]]
        ps = enumerate_partners(data, 12, ReconstructionConfig(rng=RandomSource(6)))
        lines = ps.to_csv().splitlines()
        assert lines[0] == "partner_id,hits,max_residual"
        assert len(lines) == len(ps) + 1

    def test_zero_trials(self):
        with pytest.raises(ValueError):
            enumerate_partners([ImpositionData(mub_family(3)[0], [1, 0, 0])], 0)
