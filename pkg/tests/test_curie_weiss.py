from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from orbitmc import curie_weiss as cw
from orbitmc.core import Distribution, stationary_projector, validate_kernel
from orbitmc.errors import MassNotDominant, NoConvergence, TooLarge
from orbitmc.experiments import make_rng, star_chi_square
from orbitmc.spectral import spectrum_reversible


def linear_scan_mixing_time(P, eps, cap=10**5):
    A = P.matrix.copy()
    for t in range(1, cap):
        if cw.worst_tv(A, P.pi) < eps:
            return t
        A = A @ P.matrix
    raise AssertionError("no convergence")


class TestModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            cw.CwModel(3, 1.0)
        with pytest.raises(ValueError):
            cw.CwModel(4, -1.0)
        with pytest.raises(TooLarge):
            cw.cw_distribution(16, 1.0)

    def test_two_spins(self):
        assert np.allclose(cw.cw_distribution(2, 0.0).probs, 0.25)
        # bit j set means spin j is +1: state 0 is (-,-), state 3 is (+,+)
        p = cw.cw_distribution(2, 1.0).probs
        w = np.array([math.e, 1, 1, math.e])
        assert np.allclose(p, w / w.sum(), atol=1e-15)

    def test_orbits_are_constant_levels(self):
        pi = cw.cw_distribution(4, 1.7).probs
        for orbit in cw.cw_orbit_partition(4).orbits:
            assert np.ptp(pi[list(orbit)]) <= 1e-15

    def test_orbit_sizes(self):
        assert [len(o) for o in cw.cw_orbit_partition(4).orbits] == [6, 8, 2]

    def test_orbit_weights_at_threshold(self):
        w = np.exp(cw.cw_orbit_log_weights(4, 1.25))
        # zero-magnetisation orbit is not doubled
        assert np.allclose(w, [6, 8 * math.exp(0.625), 2 * math.exp(2.5)], rtol=1e-14)
        assert w[1] == pytest.approx(14.946, abs=1e-3) and w[2] == pytest.approx(24.365, abs=1e-3)

    def test_uniform_two_spin_masses(self):
        assert np.allclose(cw.cw_orbit_masses(2, 0.0), [0.5, 0.5])

    @pytest.mark.parametrize("d", [2, 4, 6, 8, 10])
    @pytest.mark.parametrize("beta", [0.0, 0.9, 2.25, 4.0])
    def test_masses_match_state_space(self, d, beta):
        agg = cw.cw_orbit_partition(d).masses(cw.cw_distribution(d, beta))
        assert np.max(np.abs(agg - cw.cw_orbit_masses(d, beta))) <= 1e-12

    @pytest.mark.parametrize("d", [2, 4, 6, 8, 10, 12])
    def test_mass_ratio(self, d):
        beta = 1.3
        m = cw.cw_orbit_masses(d, beta)
        for i in range(1, d // 2):
            expected = (d / 2 - i) / (d / 2 + i + 1) * math.exp(2 * beta * (2 * i + 1) / d)
            assert m[i + 1] / m[i] == pytest.approx(expected, rel=1e-12)
            assert cw.orbit_mass_ratio(d, beta, i) == pytest.approx(expected, rel=1e-12)
        # the step out of the zero orbit picks up the sign doubling
        first = d / 2 / (d / 2 + 1) * math.exp(2 * beta / d)
        assert m[1] / m[0] == pytest.approx(2 * first, rel=1e-12)

    def test_beta_star(self):
        assert cw.beta_star(4) == 1.25
        assert cw.beta_star(2) == 1.0
        assert cw.beta_star(8) == 2.25

    @pytest.mark.parametrize("d", [2, 4, 6, 8])
    def test_monotone_above_threshold(self, d):
        for beta in cw.beta_star(d) + np.array([0.0, 0.1, 0.5, 2.0]):
            assert np.all(np.diff(cw.cw_orbit_masses(d, beta)) >= 0)

    @pytest.mark.parametrize("d", [2, 4, 8, 12])
    @pytest.mark.parametrize("beta", [0.0, 0.5, 2.0, 5.0])
    def test_partition_function_bound(self, d, beta):
        z = float(np.sum(np.exp(cw.cw_log_weights(d, beta))))
        assert z <= cw.partition_function_bound(d, beta) * (1 + 1e-12)


class TestTails:
    def test_merged_tail(self):
        assert cw.merged_tail_partition(4, 2) == cw.cw_orbit_partition(4)
        part = cw.merged_tail_partition(4, 1)
        assert sorted(len(o) for o in part.orbits) == [6, 10]
        with pytest.raises(ValueError):
            cw.merged_tail_partition(4, 3)

    def test_tail_mass_grows_with_beta(self):
        values = [cw.tail_mass(8, b, 2) for b in (2.25, 4, 8, 16)]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[-1] > 0.999

    def test_choose_kcut(self):
        kcut = cw.choose_kcut(8, 2.25)
        assert cw.tail_mass(8, 2.25, kcut) - 0.5 > 0.05
        assert all(cw.tail_mass(8, 2.25, k) - 0.5 <= 0.05 for k in range(1, kcut))
        # a larger cut leaves less mass in the tail
        assert cw.tail_mass(8, 2.25, kcut + 1) < cw.tail_mass(8, 2.25, kcut)
        with pytest.raises(MassNotDominant):
            cw.choose_kcut(2, 0.0)


class TestKernels:
    def test_star_spectrum(self):
        K = cw.cw_star_kernel(4, 3.0, 1)
        assert K.reversible
        mt = cw.tail_mass(4, 3.0, 1)
        s = spectrum_reversible(K)
        assert s.eigenvalues[0] == pytest.approx(1, abs=1e-12)
        assert s.eigenvalues[-1] == pytest.approx(1 - 1 / mt, abs=1e-12)
        assert np.allclose(s.eigenvalues[1:-1], 0, atol=1e-12)
        assert s.slem == pytest.approx(1 / mt - 1, abs=1e-12)

    def test_star_one_step_distance(self):
        K = cw.cw_star_kernel(2, 2.0, 1)
        p = K.pi
        mt = cw.tail_mass(2, 2.0, 1)
        head = cw.orbit_index(2) < 1
        # from a head state the row is pi restricted to the tail, renormalised
        tv_head = 0.5 * (np.sum(p[head]) + np.sum(np.abs(p[~head] / mt - p[~head])))
        # from a tail state head entries are pi/mt, tail entries pi (2mt-1)/mt^2
        tv_tail = 0.5 * (np.sum(np.abs(p[head] / mt - p[head])) + np.sum(np.abs(p[~head] * (2 * mt - 1) / mt**2 - p[~head])))
        assert cw.worst_tv(K.matrix, p) == pytest.approx(max(tv_head, tv_tail), abs=1e-15)

    def test_star_requires_dominant_tail(self):
        with pytest.raises(MassNotDominant):
            cw.cw_star_kernel(8, 0.5, 4)

    def test_glauber(self):
        G = cw.glauber_kernel(2, 0.0)
        off = G.matrix[~np.eye(4, dtype=bool)]
        assert set(np.round(off, 12)) == {0.0, 0.5}
        assert np.allclose(np.diag(G.matrix), 0)
        assert cw.glauber_kernel(4, 2.0).reversible
        with pytest.raises(TooLarge):
            cw.glauber_kernel(16, 1.0)

    def test_glauber_gap_against_eigensolver(self):
        G = cw.glauber_kernel(4, 2.0)
        gap = spectrum_reversible(G).right_gap
        # independent dense eigensolver on the similarity transform
        s = np.sqrt(G.pi)
        ev = np.sort(np.linalg.eigvals(s[:, None] * G.matrix / s[None, :]).real)[::-1]
        assert gap == pytest.approx(1 - ev[1], abs=1e-10)
        assert gap <= 4**4 * math.exp(-2.0 * 4)


class TestMixingTime:
    def test_projector(self):
        assert cw.mixing_time_exact(stationary_projector(Distribution.uniform(5)), 0.25) == 1

    @pytest.mark.parametrize("d,beta", [(2, 1.0), (4, 2.0), (6, 1.5)])
    def test_matches_linear_scan(self, d, beta):
        for P in (cw.glauber_kernel(d, beta), cw.cw_star_kernel(d, max(beta, 2.0), 1)):
            for eps in (0.25, 0.1, 0.01):
                assert cw.mixing_time_exact(P, eps) == linear_scan_mixing_time(P, eps)

    def test_no_convergence(self):
        swap = validate_kernel([[0, 1], [1, 0]], Distribution.uniform(2))
        with pytest.raises(NoConvergence):
            cw.mixing_time_exact(swap, 0.25, cap=1000)

    def test_star_below_bound_at_eight_spins(self):
        d, beta, eps = 8, 2.25, 0.25
        kcut = cw.choose_kcut(d, beta)
        delta = cw.tail_mass(d, beta, kcut) - 0.5
        t = cw.mixing_time_exact(cw.cw_star_kernel(d, beta, kcut), eps)
        assert t <= cw.star_mixing_upper_bound(d, beta, delta, eps)

    def test_glauber_above_relaxation_bound(self):
        d, beta, eps = 8, 2.25, 0.25
        G = cw.glauber_kernel(d, beta)
        t_rel = 1 / spectrum_reversible(G).abs_gap
        assert cw.mixing_time_exact(G, eps) >= (t_rel - 1) * math.log(1 / (2 * eps))


class TestStreaming:
    def test_conversions(self):
        for x in range(16):
            assert cw.spins_to_state(cw.state_to_spins(x, 4)) == x

    def test_deterministic_trace(self):
        model = cw.CwModel(2, 2.0)

        def trace(seed):
            rng = make_rng(seed, 0)
            x = np.array([1, -1], dtype=np.int8)
            out = []
            for _ in range(50):
                x = cw.cw_star_step(x, model, 1, rng)
                out.append(cw.spins_to_state(x))
            return out

        assert trace(7) == trace(7)
        assert trace(7) != trace(8)

    def test_head_states_jump_into_tail(self):
        model = cw.CwModel(6, 3.0)
        rng = make_rng(0, 0)
        x = cw.state_to_spins(0b000111, 6)  # zero magnetisation
        for _ in range(2000):
            y = cw.cw_star_step(x, model, 1, rng)
            assert abs(int(y.sum())) >= 2

    def test_row_matches_dense_kernel(self):
        d, beta, kcut, start, samples = 4, 2.0, 1, 0b0101, 200_000
        rng = make_rng(3, 0)
        model = cw.CwModel(d, beta)
        x = cw.state_to_spins(start, d)
        counts = np.bincount([cw.spins_to_state(cw.cw_star_step(x, model, kcut, rng)) for _ in range(samples)],
                             minlength=1 << d)
        row = cw.cw_star_kernel(d, beta, kcut).matrix[start]
        assert counts[row <= 1e-15].sum() == 0
        live = row > 1e-15
        assert stats.chisquare(counts[live], row[live] * samples).pvalue > 1e-3

    def test_chi_square_helper_from_tail_state(self):
        pval, outside = star_chi_square(4, 2.0, 1, 0b1111, 50_000, make_rng(5, 1))
        assert outside == 0 and pval > 1e-3
