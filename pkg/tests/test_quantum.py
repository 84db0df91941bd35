import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import (
    atomic_generators,
    brute_force_sector_count,
    eq19_enumeration,
    tavis_cummings_ground,
    tavis_cummings_sector_ground,
)
from trilevel.errors import CapReached, DimensionMismatch, InvalidSector
from trilevel.model import Configuration, ModelParams, excitation_weights, resonant
from trilevel.quantum import (
    BasisState,
    SearchOptions,
    analytic_one_atom_xi,
    build_hamiltonian,
    commutant_check,
    eigen_residual,
    enumerate_sector,
    global_ground,
    sector_ground,
    sector_lower_bound,
)
from trilevel.semiclassical import minimize

XI1 = ModelParams(0, 1, 2, config="xi", n_atoms=1)


class TestEnumerate:
    def test_xi_one_atom_m1(self):
        b = enumerate_sector("xi", 1, 1)
        assert b.states == (BasisState(1, 0, 0, 1), BasisState(0, 1, 0, 0))

    def test_xi_one_atom_m2(self):
        assert len(enumerate_sector("xi", 1, 2)) == 3

    def test_lambda_vacuum(self):
        b = enumerate_sector("lambda", 1, 0)
        assert b.states == (BasisState(1, 0, 0, 0), BasisState(0, 1, 0, 0))

    def test_negative_m_is_empty(self):
        assert len(enumerate_sector("v", 3, -1)) == 0

    @pytest.mark.parametrize("config", list(Configuration))
    def test_counts_match_brute_force(self, config):
        w = excitation_weights(config).level_weights
        for n in range(1, 5):
            for m in range(13):
                basis = enumerate_sector(config, n, m)
                assert len(basis) == brute_force_sector_count(w, n, m)
                assert len(set(basis.states)) == len(basis)
                for s in basis.states:
                    assert sum(s.occupations) == n
                    assert s.photons + w[1] * s.n2 + w[2] * s.n3 == m
                keys = [(s.n3, s.n2) for s in basis.states]
                assert keys == sorted(keys)


class TestHamiltonian:
    def test_one_atom_m1(self):
        h = build_hamiltonian(enumerate_sector("xi", 1, 1), XI1.replace(mu12=0.7))
        np.testing.assert_array_equal(h, [[1.0, -0.7], [-0.7, 1.0]])

    def test_free_hamiltonian_is_diagonal(self):
        p = ModelParams(0.1, 0.4, 1.7, config="v", n_atoms=3)
        basis = enumerate_sector("v", 3, 4)
        h = build_hamiltonian(basis, p)
        expected = [s.photons + 0.1 * s.n1 + 0.4 * s.n2 + 1.7 * s.n3 for s in basis.states]
        np.testing.assert_allclose(np.diag(h), expected, rtol=0, atol=1e-14)
        assert np.count_nonzero(h - np.diag(np.diag(h))) == 0

    def test_one_atom_m2_eigenvalue(self):
        e, _ = sector_ground(enumerate_sector("xi", 1, 2), XI1.replace(mu12=1, mu23=1))
        assert e == pytest.approx(2 - math.sqrt(3), abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_hamiltonian(enumerate_sector("xi", 2, 1), XI1)
        with pytest.raises(DimensionMismatch):
            build_hamiltonian(enumerate_sector("v", 1, 1), XI1)

    def test_forbidden_coupling_leaves_sector(self):
        with pytest.raises(DimensionMismatch):
            build_hamiltonian(enumerate_sector("xi", 1, 1), XI1.replace(mu13=1.0))

    @pytest.mark.parametrize("config", list(Configuration))
    def test_exactly_symmetric(self, config):
        p = resonant(config, 3).with_axes(1.3, -0.7)
        for m in range(8):
            h = build_hamiltonian(enumerate_sector(config, 3, m), p)
            assert np.array_equal(h, h.T)

    def test_bosonic_elements_match_gelfand_tsetlin_for_two_atoms(self):
        # GT patterns of [2,0,0]: m12 = n1 + n2, m11 = n1.  Within the gl(2)
        # subalgebra E21|m11> = sqrt((m12 - m11 + 1)(m11 - m22)) |m11 - 1>.
        states, gens = atomic_generators(2)
        index = {s: k for k, s in enumerate(states)}
        for n1, n2, n3 in states:
            m12, m11, m22 = n1 + n2, n1, 0
            if m11 == 0:
                continue
            expected = math.sqrt((m12 - m11 + 1) * (m11 - m22))
            target = index[(n1 - 1, n2 + 1, n3)]
            assert gens[(1, 0)][target, index[(n1, n2, n3)]] == pytest.approx(expected)
            assert gens[(0, 1)][index[(n1, n2, n3)], target] == pytest.approx(expected)
        # hand-evaluated: A_32 |0,1,1> = sqrt(2) |0,0,2>, A_31 |2,0,0> = sqrt(2) |1,0,1>
        assert gens[(2, 1)][index[(0, 0, 2)], index[(0, 1, 1)]] == pytest.approx(math.sqrt(2))
        assert gens[(2, 0)][index[(1, 0, 1)], index[(2, 0, 0)]] == pytest.approx(math.sqrt(2))

    @pytest.mark.parametrize("n_atoms", [1, 2, 3])
    def test_u3_commutation_relations(self, n_atoms):
        _, g = atomic_generators(n_atoms)
        for i, j, k, l in np.ndindex(3, 3, 3, 3):
            lhs = g[(i, j)] @ g[(k, l)] - g[(k, l)] @ g[(i, j)]
            rhs = (j == k) * g[(i, l)] - (i == l) * g[(k, j)]
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_matches_generator_construction(self):
        # assemble H from the generator matrices and compare one sector
        n, m = 2, 3
        p = resonant("xi", n, mu12=0.8, mu23=1.9)
        states, g = atomic_generators(n)
        basis = enumerate_sector("xi", n, m)
        h = build_hamiltonian(basis, p)
        aidx = {s: k for k, s in enumerate(states)}
        for a, sa in enumerate(basis.states):
            for b, sb in enumerate(basis.states):
                ia, ib = aidx[sa.occupations], aidx[sb.occupations]
                val = 0.0
                if sa == sb:
                    val += sa.photons + sum(w * x for w, x in zip(p.omegas, sa.occupations))
                for (lo, hi), mu in (((0, 1), p.mu12), ((1, 2), p.mu23)):
                    if sa.photons == sb.photons - 1:
                        val -= mu / math.sqrt(n) * math.sqrt(sb.photons) * g[(hi, lo)][ia, ib]
                    if sa.photons == sb.photons + 1:
                        val -= mu / math.sqrt(n) * math.sqrt(sa.photons) * g[(lo, hi)][ia, ib]
                assert h[a, b] == pytest.approx(val, abs=1e-13)


class TestSectorGround:
    def test_one_atom_resonant(self):
        e, v = sector_ground(enumerate_sector("xi", 1, 1), XI1.replace(mu12=1.0))
        assert e == pytest.approx(0.0, abs=1e-14)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
        assert v[np.argmax(np.abs(v))] > 0

    def test_free_minimum(self):
        p = ModelParams(0, 0.3, 0.9, config="lambda", n_atoms=3)
        basis = enumerate_sector("lambda", 3, 2)
        e, _ = sector_ground(basis, p)
        assert e == min(s.photons + 0.3 * s.n2 + 0.9 * s.n3 for s in basis.states)

    def test_tavis_cummings_sector(self):
        p = resonant("xi", 2, mu12=1.5)
        e, _ = sector_ground(enumerate_sector("xi", 2, 2), p)
        assert e == pytest.approx(tavis_cummings_sector_ground(2, 1.0, 1.5, 2), abs=1e-10)

    @pytest.mark.parametrize("config", list(Configuration))
    def test_residuals(self, config):
        p = resonant(config, 4).with_axes(2.1, 0.9)
        for m in range(15):
            basis = enumerate_sector(config, 4, m)
            e, v = sector_ground(basis, p)
            h = build_hamiltonian(basis, p)
            assert eigen_residual(h, e, v) <= 1e-10 * max(1.0, abs(e))

    def test_sign_invariance(self):
        a = sector_ground(enumerate_sector("v", 3, 4), resonant("v", 3, mu12=1.1, mu13=0.6))[0]
        b = sector_ground(enumerate_sector("v", 3, 4), resonant("v", 3, mu12=-1.1, mu13=0.6))[0]
        assert a == pytest.approx(b, abs=1e-12)


class TestAnalyticOneAtom:
    def test_values(self):
        assert analytic_one_atom_xi(1, 1.0, 7.0) == 0.0
        assert analytic_one_atom_xi(2, 1.0, 1.0) == pytest.approx(2 - math.sqrt(3))
        assert analytic_one_atom_xi(1, 0.0, 0.0) == 1.0

    def test_invalid_sector(self):
        with pytest.raises(InvalidSector):
            analytic_one_atom_xi(0, 1.0, 1.0)

    @pytest.mark.parametrize("mu12", [0.0, 0.5, 1.0, 2.0])
    @pytest.mark.parametrize("mu23", [0.0, 0.5, 1.0, 2.0])
    def test_matches_sector_ground(self, mu12, mu23):
        p = XI1.replace(mu12=mu12, mu23=mu23)
        for m in range(1, 31):
            e, _ = sector_ground(enumerate_sector("xi", 1, m), p)
            assert abs(e - analytic_one_atom_xi(m, mu12, mu23)) < 1e-10


class TestGlobalGround:
    @pytest.mark.parametrize("config", list(Configuration))
    def test_vacuum(self, config):
        res = global_ground(resonant(config, 3))
        assert res.energy == 0.0 and res.m_star == 0
        assert res.m_expectation == 0.0

    def test_normal_region_two_atoms(self):
        res = global_ground(resonant("xi", 2, mu12=0.5))
        assert res.m_star == 0 and res.energy == 0.0

    def test_one_atom_enumeration(self):
        energy, m_star = eq19_enumeration(2.0, 0.0)
        assert (energy, m_star) == (-1.0, 1)
        res = global_ground(XI1.replace(mu12=2.0))
        assert res.energy == pytest.approx(energy, abs=1e-12)
        assert res.m_star == m_star

    @pytest.mark.parametrize("mu12, mu23", [(0.7, 2.0), (1.3, 0.4), (2.5, 2.5), (0.0, 3.0)])
    def test_one_atom_enumeration_general(self, mu12, mu23):
        energy, m_star = eq19_enumeration(mu12, mu23)
        res = global_ground(XI1.replace(mu12=mu12, mu23=mu23))
        assert res.energy == pytest.approx(energy, abs=1e-10)
        assert res.m_star == m_star

    def test_result_fields(self):
        res = global_ground(resonant("lambda", 3, mu13=2.0, mu23=1.0))
        assert res.energy == min(res.sector_energies.values())
        assert res.sector_energies[res.m_star] == res.energy
        assert np.linalg.norm(res.amplitudes) == pytest.approx(1.0, abs=1e-12)
        assert len(res.amplitudes) == len(res.basis)
        d = res.to_dict()
        assert d["m_star"] == res.m_star and len(d["top_amplitudes"]) <= 10

    def test_monotone_tail(self):
        res = global_ground(resonant("xi", 4, mu12=1.7, mu23=2.2))
        last = sorted(res.sector_energies)[-20:]
        assert all(res.sector_energies[m] > res.energy for m in last)

    def test_cap_reached(self):
        with pytest.raises(CapReached) as info:
            global_ground(resonant("xi", 2, mu12=3.0), SearchOptions(window=20, hard_cap=3))
        assert info.value.result is not None and not info.value.result.converged

    def test_late_collective_sector_is_found(self):
        # every sector up to M=20 lies above zero here, yet the ground state
        # is collective: the window alone would stop at M=20
        p = resonant("xi", 10, mu12=0.1, mu23=2.5)
        res = global_ground(p)
        early = [res.sector_energies[m] for m in range(21)]
        assert min(early) == 0.0
        assert res.m_star > 20 and res.energy < 0

    @settings(max_examples=20, deadline=None)
    @given(mu=st.floats(0, 3), config=st.sampled_from(list(Configuration)),
           n=st.integers(1, 4), m=st.integers(0, 60))
    def test_lower_bound_holds(self, mu, config, n, m):
        p = resonant(config, n).with_axes(mu, 3 - mu)
        bound = sector_lower_bound(p, m)
        basis = enumerate_sector(config, n, m)
        assert sector_ground(basis, p)[0] >= bound - 1e-9
        assert sector_lower_bound(p, m + 1) >= bound


@pytest.mark.parametrize("config, n, m", [("xi", 2, 3), ("lambda", 2, 1), ("v", 1, 2)])
def test_commutant_zero(config, n, m):
    p = resonant(config, n).with_axes(0.9, 1.7)
    assert commutant_check(p, n, m) == 0.0


def test_commutant_detects_forbidden_coupling():
    p = resonant("xi", 2, mu12=0.9, mu23=1.7).replace(mu13=0.5)
    assert commutant_check(p, 2, 3) > 0.0


@pytest.mark.parametrize("n_atoms", [1, 2, 4])
@pytest.mark.parametrize("mu", [0.0, 0.8, 1.9, 3.0])
def test_tavis_cummings_reduction(n_atoms, mu):
    tc = tavis_cummings_ground(n_atoms, 1.0, mu)
    assert global_ground(resonant("xi", n_atoms, mu12=mu)).energy == pytest.approx(tc, abs=1e-10)
    assert global_ground(resonant("v", n_atoms, mu12=mu)).energy == pytest.approx(tc, abs=1e-10)
    tc_l = tavis_cummings_ground(n_atoms, 1.3, mu)
    assert global_ground(resonant("lambda", n_atoms, mu13=mu)).energy == pytest.approx(
        tc_l, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(0, 3), y=st.floats(0, 3), n=st.integers(1, 6),
       config=st.sampled_from(list(Configuration)))
def test_variational_bound(x, y, n, config):
    p = resonant(config, n).with_axes(x, y)
    assert global_ground(p).energy / n <= minimize(p).energy_per_atom + 1e-9
