from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from instances import metropolized, random_instance, random_partition, random_pi
from orbitmc import tolerances
from orbitmc.core import (
    Distribution,
    OrbitKernelKind,
    OrbitPartition,
    additive_mixture,
    build_orbit_kernel,
    gibbs_kernel,
    gibbs_sandwich_closed_form,
    has_deterministic_two_cycle,
    identity_kernel,
    is_reversible,
    lazify,
    power_distance_to_gibbs,
    sandwich,
    stationary_projector,
    validate_kernel,
)
from orbitmc.errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    InternalConsistencyError,
    InvalidDistribution,
    InvalidPartition,
    NonStochastic,
)

THREE_PI = Distribution(np.array([0.3, 0.3, 0.4]))
THREE_P = [[0, 0.4, 0.6], [0.4, 0, 0.6], [0.45, 0.45, 0.1]]
THREE_PART = OrbitPartition.from_orbits([[0, 1], [2]])


@st.composite
def instances(draw, n_min=2, n_max=9):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(n_min, n_max))
    pi = random_pi(rng, n)
    return rng, pi, random_partition(rng, n) if n > 1 else OrbitPartition.single(1), metropolized(rng, pi)


class TestDistribution:
    def test_rejects_zero_and_bad_sum(self):
        with pytest.raises(InvalidDistribution):
            Distribution(np.array([0.5, 0.5, 0.0]))
        with pytest.raises(InvalidDistribution):
            Distribution(np.array([0.5, 0.6]))

    def test_read_only(self):
        d = Distribution.uniform(3)
        with pytest.raises(ValueError):
            d.probs[0] = 1.0

    def test_log_weights_are_stable(self):
        d = Distribution.from_log_weights([1000.0, 1000.0])
        assert np.allclose(d.probs, 0.5)


class TestPartition:
    def test_must_cover_exactly(self):
        with pytest.raises(InvalidPartition):
            OrbitPartition.from_orbits([[0, 1], [1, 2]])
        with pytest.raises(InvalidPartition):
            OrbitPartition.from_orbits([[0], [2]], n=3)
        with pytest.raises(InvalidPartition):
            OrbitPartition.from_orbits([[0, 1], []])

    def test_equality_ignores_order(self):
        a = OrbitPartition.from_orbits([[2], [1, 0]])
        assert a == THREE_PART
        assert hash(a) == hash(THREE_PART)

    def test_masses_and_indicator(self):
        assert np.allclose(THREE_PART.masses(THREE_PI), [0.6, 0.4])
        assert THREE_PART.indicator().sum(axis=0).tolist() == [2, 1]

    def test_labels_ordered(self):
        p = OrbitPartition.from_labels_ordered([1, 0, 1], 2)
        assert p.orbits == ((1,), (0, 2))


class TestValidation:
    def test_flags(self):
        P = validate_kernel(THREE_P, THREE_PI)
        assert P.flags() == {"row_stochastic": True, "stationary": True, "reversible": True}

    def test_nonstationary_flagged_not_rejected(self):
        P = validate_kernel(np.eye(3)[[1, 2, 0]], THREE_PI)
        assert P.stationary is False and P.reversible is False

    def test_bad_rows(self):
        with pytest.raises(NonStochastic):
            validate_kernel([[0.5, 0.6, 0], [0, 1, 0], [0, 0, 1]], THREE_PI)
        with pytest.raises(NonStochastic):
            validate_kernel([[1.5, -0.5, 0], [0, 1, 0], [0, 0, 1]], THREE_PI)
        with pytest.raises(DimensionMismatch):
            validate_kernel(np.eye(2), THREE_PI)

    def test_tolerance_override(self):
        near = np.eye(3)
        near[0, 0] += 1e-9
        with pytest.raises(NonStochastic):
            validate_kernel(near, THREE_PI)
        with tolerances.override(stochastic=1e-6, entry=1e-6):
            validate_kernel(near, THREE_PI)


class TestOrbitKernels:
    def test_gibbs_rows(self):
        G = gibbs_kernel(THREE_PART, THREE_PI)
        assert np.allclose(G.matrix, [[0.5, 0.5, 0], [0.5, 0.5, 0], [0, 0, 1]])

    def test_mh_uniform_off_diagonal(self):
        n = 5
        M = build_orbit_kernel("mh", OrbitPartition.single(n), Distribution.uniform(n))
        off = M.matrix[~np.eye(n, dtype=bool)]
        assert np.allclose(off, 1 / (n - 1))
        assert np.allclose(np.diag(M.matrix), 0)

    def test_barker_equals_gibbs_for_pairs(self):
        rng = np.random.default_rng(3)
        pi = random_pi(rng, 6)
        part = OrbitPartition.from_orbits([[0, 3], [1], [2, 5], [4]])
        B = build_orbit_kernel(OrbitKernelKind.BARKER, part, pi)
        assert np.allclose(B.matrix, gibbs_kernel(part, pi).matrix, atol=1e-15)

    def test_single_orbit_gibbs_is_projector(self):
        pi = random_pi(np.random.default_rng(1), 5)
        assert np.allclose(gibbs_kernel(OrbitPartition.single(5), pi).matrix, stationary_projector(pi).matrix)

    def test_singletons_give_identity(self):
        pi = random_pi(np.random.default_rng(1), 4)
        for kind in OrbitKernelKind:
            assert np.array_equal(build_orbit_kernel(kind, OrbitPartition.singletons(4), pi).matrix, np.eye(4))

    @settings(max_examples=60, deadline=None)
    @given(instances())
    def test_orbit_kernels_reversible_and_absorbing(self, inst):
        _, pi, part, _ = inst
        G = gibbs_kernel(part, pi).matrix
        for kind in OrbitKernelKind:
            K = build_orbit_kernel(kind, part, pi)
            assert K.stationary and K.reversible
            assert np.all(K.matrix[~part.same_orbit()] == 0)
            # GK = KG = G
            assert np.allclose(G @ K.matrix, G, atol=1e-12)
            assert np.allclose(K.matrix @ G, G, atol=1e-12)


class TestSandwich:
    def test_three_state_gpg(self):
        P = validate_kernel(THREE_P, THREE_PI)
        G = gibbs_kernel(THREE_PART, THREE_PI)
        expected = [[0.2, 0.2, 0.6], [0.2, 0.2, 0.6], [0.45, 0.45, 0.1]]
        assert np.max(np.abs(sandwich(G, P, G).matrix - expected)) <= 1e-12

    def test_gpg_of_gibbs_member_is_fixed(self):
        pi = random_pi(np.random.default_rng(2), 5)
        part = OrbitPartition.from_orbits([[0, 1], [2, 3, 4]])
        G = gibbs_kernel(part, pi)
        assert np.allclose(sandwich(G, G, G).matrix, G.matrix)

    def test_single_orbit_sandwich_is_projector(self):
        _, pi, _, P = random_instance(4)
        G = gibbs_kernel(OrbitPartition.single(pi.n), pi)
        assert np.allclose(sandwich(G, P, G).matrix, stationary_projector(pi).matrix, atol=1e-12)

    def test_inconsistency_detected(self, monkeypatch):
        import orbitmc.core as core

        P = validate_kernel(THREE_P, THREE_PI)
        G = gibbs_kernel(THREE_PART, THREE_PI)
        monkeypatch.setattr(core, "gibbs_sandwich_closed_form", lambda P, part: np.zeros((3, 3)))
        with pytest.raises(InternalConsistencyError):
            sandwich(G, P, G)

    def test_reference_mismatch(self):
        P = validate_kernel(THREE_P, THREE_PI)
        other = identity_kernel(Distribution(np.array([0.2, 0.3, 0.5])))
        with pytest.raises(DimensionMismatch):
            sandwich(other, P, other)

    @settings(max_examples=60, deadline=None)
    @given(instances())
    def test_closed_form_matches_product(self, inst):
        _, pi, part, P = inst
        G = gibbs_kernel(part, pi).matrix
        assert np.max(np.abs(G @ P.matrix @ G - gibbs_sandwich_closed_form(P, part))) <= 1e-12

    @settings(max_examples=40, deadline=None)
    @given(instances())
    def test_sandwich_preserves_reversibility(self, inst):
        _, pi, part, P = inst
        for kind in OrbitKernelKind:
            K = build_orbit_kernel(kind, part, pi)
            S = sandwich(K, P, K)
            assert S.stationary and is_reversible(S.matrix, pi.probs)


class TestMixtures:
    def test_alpha_range(self):
        P = validate_kernel(THREE_P, THREE_PI)
        with pytest.raises(AlphaOutOfRange):
            additive_mixture(1.5, P, P)

    def test_lazify(self):
        P = validate_kernel(THREE_P, THREE_PI)
        assert np.allclose(lazify(P).matrix, 0.5 * (np.eye(3) + np.asarray(THREE_P)))


class TestPowers:
    def test_mh_powers_approach_gibbs(self):
        pi = Distribution(np.array([0.1, 0.15, 0.2, 0.25, 0.3]))
        part = OrbitPartition.from_orbits([[0, 1, 2], [3, 4]])
        d = [power_distance_to_gibbs("mh", part, pi, t) for t in (1, 5, 200)]
        assert d[0] > d[1] > d[2]
        assert d[2] < 1e-10

    def test_deterministic_two_cycle(self):
        pi = Distribution(np.array([0.25, 0.25, 0.5]))
        part = OrbitPartition.from_orbits([[0, 1], [2]])
        assert has_deterministic_two_cycle(part, pi)
        M = build_orbit_kernel("mh", part, pi)
        assert np.allclose(M.matrix[:2, :2], [[0, 1], [1, 0]])
        # the flip never settles: even powers are the identity on the pair
        assert power_distance_to_gibbs("mh", part, pi, 2) == pytest.approx(0.5)
