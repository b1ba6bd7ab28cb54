import json

import numpy as np
import pytest

from statedet import RandomSource
from statedet.core import DimensionError, random_state, ray_distance
from statedet.imposition import ImpositionData, born_distribution
from statedet.observables import fourier_basis, mub_family, standard_basis
from statedet.reconstruct import (
    IterationTrace,
    ReconstructionConfig,
    TraceEntry,
    contraction_factors,
    cycle,
    detect_stall,
    limit_distances,
    orthogonal_restart,
    reconstruct,
    residual,
)


def mub_data(phi, count=3):
    return [ImpositionData.from_state(b, phi) for b in mub_family(len(phi))[:count]]


class TestResidual:
    def test_generator(self, rng):
        phi = random_state(3, rng)
        assert residual(phi, mub_data(phi)) <= 1e-15

    def test_eigenvector_against_uniform(self):
        data = [ImpositionData(standard_basis(3), np.full(3, 3 ** -0.5))]
        assert residual([1, 0, 0], data) == pytest.approx(2 / 3)

    def test_partner_is_indistinguishable(self):
        family = mub_family(3)
        uniform = [ImpositionData(b, np.full(3, 3 ** -0.5)) for b in family[:3]]
        # every vector of the remaining basis is a partner of the others
        for v in family[3].vectors:
            assert residual(v, uniform) <= 1e-12

    def test_empty(self):
        with pytest.raises(ValueError):
            residual([1, 0], [])

    def test_mixed_dimensions(self):
        with pytest.raises(DimensionError):
            residual([1, 0], [ImpositionData(standard_basis(2), [1, 0]), ImpositionData(standard_basis(3), [1, 0, 0])])


class TestCycle:
    def test_single_observable_idempotent(self, rng):
        data = [ImpositionData.from_state(fourier_basis(4), random_state(4, rng))]
        s = random_state(4, rng)
        once = cycle(s, data)
        assert ray_distance(cycle(once, data), once) < 1e-12

    def test_last_operator_matches_exactly(self, rng):
        phi = random_state(3, rng)
        data = mub_data(phi)
        s = cycle(random_state(3, rng), data)
        assert np.max(np.abs(born_distribution(data[-1].basis, s) - data[-1].probs)) < 1e-12
        assert abs(np.linalg.norm(s) - 1) < 1e-10

    def test_order(self, rng):
        phi = random_state(3, rng)
        data = mub_data(phi)
        s = random_state(3, rng)
        s_rev = cycle(s, data, order=[2, 1, 0])
        assert np.max(np.abs(born_distribution(data[0].basis, s_rev) - data[0].probs)) < 1e-12


class TestDetectStall:
    config = ReconstructionConfig()

    def test_geometric_half(self):
        assert not detect_stall([0.5**k for k in range(40)], self.config)

    def test_constant(self):
        assert detect_stall([0.3] * 25, self.config)

    def test_boundary(self):
        w, f = self.config.stall_window, self.config.stall_factor
        assert not detect_stall([1.0] * w + [f**w], self.config)
        assert detect_stall([1.0] * w + [f**w * 1.0000001], self.config)

    def test_short_trace(self):
        assert not detect_stall([0.3] * 20, self.config)

    def test_accepts_trace(self):
        trace = IterationTrace([TraceEntry(i, 0.3) for i in range(30)])
        assert detect_stall(trace, self.config)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"residual_tol": 0}, {"max_cycles": 0}, {"stall_window": 1},
        {"restart_policy": "never"}, {"ordering_policy": "sorted"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ReconstructionConfig(**kwargs)


def test_orthogonal_restart(rng):
    u = random_state(5, rng)
    v = orthogonal_restart(u, rng)
    assert abs(np.vdot(u, v)) < 1e-14
    assert abs(np.linalg.norm(v) - 1) < 1e-14


class TestReconstruct:
    def test_three_mubs_converge(self):
        phi = random_state(3, RandomSource(1))
        result = reconstruct(mub_data(phi), ReconstructionConfig(rng=RandomSource(2)), reference=phi)
        assert result.converged
        assert result.final_residual <= 1e-12
        assert min(ray_distance(result.final_state, phi), 1) < 1e-6
        assert all(e.residual >= 0 for e in result.trace.entries)

    def test_eigenvector_one_cycle(self):
        data = [ImpositionData(standard_basis(3), [0, 1, 0])]
        result = reconstruct(data)
        assert result.converged and len(result.trace) == 1
        assert ray_distance(result.final_state, [0, 1, 0]) < 1e-12

    def test_deterministic(self):
        phi = random_state(3, RandomSource(8))
        config = ReconstructionConfig(rng=RandomSource(9), ordering_policy="random-per-cycle")
        a, b = reconstruct(mub_data(phi), config), reconstruct(mub_data(phi), config)
        assert np.array_equal(a.final_state, b.final_state)
        assert a.trace.residuals == b.trace.residuals
        assert json.dumps(a.to_dict(config)) == json.dumps(b.to_dict(config))

    @pytest.mark.parametrize("order", ["fixed-cyclic", "random-per-cycle"])
    def test_orderings_converge(self, order):
        hits = 0
        for seed in range(20):
            phi = random_state(3, RandomSource(seed, 1))
            result = reconstruct(mub_data(phi), ReconstructionConfig(rng=RandomSource(seed, 2), ordering_policy=order))
            hits += result.converged
        assert hits == 20

    def test_inconsistent_data_fails(self):
        phi = random_state(3, RandomSource(12))
        data = mub_data(phi)
        p = data[1].probs.copy()
        k = int(np.argmax(p))
        p[k] -= 0.1
        p[(k + 1) % 3] += 0.1
        data[1] = ImpositionData.from_probs(data[1].basis, p)
        result = reconstruct(data, ReconstructionConfig(rng=RandomSource(3)))
        assert result.status == "failed"
        assert result.restarts_used == 10

    def test_max_cycles_bounds_work(self):
        phi = random_state(7, RandomSource(3))
        result = reconstruct(mub_data(phi, 2), ReconstructionConfig(max_cycles=5))
        assert len(result.trace) <= 5

    def test_restart_is_orthogonal(self):
        phi = random_state(3, RandomSource(12))
        data = mub_data(phi)
        data[1] = ImpositionData(data[1].basis, np.sqrt([1.0, 0.0, 0.0]))
        data[0] = ImpositionData(data[0].basis, np.sqrt([1.0, 0.0, 0.0]))
        result = reconstruct(data, ReconstructionConfig(max_restarts=2))
        starts = result.initial_states
        assert len(starts) == 3
        assert abs(np.vdot(starts[0], starts[1])) < 1e-12
        assert abs(np.vdot(starts[1], starts[2])) < 1e-12

    def test_tail_residual_nonincreasing(self):
        phi = random_state(3, RandomSource(21))
        result = reconstruct(mub_data(phi, 2), ReconstructionConfig(rng=RandomSource(4)))
        assert result.converged
        tail = result.trace.residuals[-10:]
        assert all(b <= a for a, b in zip(tail, tail[1:]))

    def test_serialization(self):
        phi = random_state(3, RandomSource(1))
        result = reconstruct(mub_data(phi))
        d = json.loads(json.dumps(result.to_dict(ReconstructionConfig())))
        assert d["status"] == "converged"
        assert len(d["trace"]) == d["cycles"]
        csv_lines = result.trace.to_csv().splitlines()
        assert csv_lines[0] == "cycle,residual,distance"
        assert len(csv_lines) == len(result.trace) + 1


def test_limit_distances_geometric():
    phi = random_state(3, RandomSource(31))
    result, dists = limit_distances(mub_data(phi), ReconstructionConfig(rng=RandomSource(1)))
    assert result.converged
    ratios = contraction_factors(dists)
    assert ratios and np.median(ratios) > 1
