import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from covasym.abelian import abelian_kraus, charge_space
from covasym.channels import (CovariantChannel, DensityMatrix, ReducedElementTable, random_covariant_channel,
                              random_covariant_unitary, random_density_matrix, twirl, uniform_covariant_channel)
from covasym.embed import BipartiteState, embed_C, embed_Cg, twirl_distance
from covasym.errors import ChannelError, DomainError, NumericalAbort
from covasym.monotones import (asymmetry_monotone, asymmetry_sup, conservation_check, ensemble_average_check,
                               evaluate_monotone, g_asymmetry, generator_expectations, log_negativity,
                               monotonicity_check, negativity, partial_transpose, pt_trace_norm,
                               pure_state_trace_norm, random_standard_form_state, ree_bounds, relative_entropy,
                               von_neumann_entropy)
from covasym.repkit import GroupElement, GroupKind, SpaceSpec, finite_set, rotation_to_x


def bell_state() -> BipartiteState:
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    return BipartiteState(np.outer(psi, psi.conj()), (2, 2))


class TestEntanglementMonotones:
    def test_bell_state(self):
        state = bell_state()
        assert_allclose(np.linalg.eigvalsh(partial_transpose(state)), [-0.5, 0.5, 0.5, 0.5], atol=1e-14)
        assert negativity(state) == pytest.approx(0.5)
        assert log_negativity(state) == pytest.approx(1.0)

    def test_product_state_is_zero(self):
        state = BipartiteState.product(np.diag([0.3, 0.7]), np.eye(3) / 3)
        value = evaluate_monotone('negativity', state)
        assert value.value == pytest.approx(0.0, abs=1e-14)
        assert value.cut == (2, 3)
        assert log_negativity(state) == pytest.approx(0.0, abs=1e-14)

    def test_unknown_monotone(self):
        with pytest.raises(DomainError):
            evaluate_monotone('concurrence', bell_state())

    def test_partial_transpose_keeps_trace_norm_of_product(self, rng):
        a = random_density_matrix(SpaceSpec.from_irreps(GroupKind.SU2, (1,)), rng).matrix
        b = random_density_matrix(SpaceSpec.from_irreps(GroupKind.SU2, (2,)), rng).matrix
        assert pt_trace_norm(BipartiteState.product(a, b)) == pytest.approx(1.0)


class TestEntropies:
    def test_maximally_mixed_entropy_in_bits(self):
        assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0)
        assert von_neumann_entropy(np.diag([1.0, 0.0])) == pytest.approx(0.0)

    def test_negative_eigenvalue_aborts(self):
        with pytest.raises(NumericalAbort) as info:
            von_neumann_entropy(np.diag([1.1, -0.1]))
        assert info.value.diagnostics['min_eigenvalue'] == pytest.approx(-0.1)

    def test_relative_entropy(self):
        up, down = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        assert relative_entropy(up, down) == float('inf')
        assert relative_entropy(up, up) == pytest.approx(0.0, abs=1e-12)
        assert relative_entropy(up, np.eye(2) / 2) == pytest.approx(1.0)

    def test_relative_entropy_is_isometry_invariant(self, rng, counterexample_space):
        rho = random_density_matrix(counterexample_space, rng)
        sigma = random_density_matrix(counterexample_space, rng)
        direct = relative_entropy(rho, sigma)
        for s in finite_set(counterexample_space):
            assert relative_entropy(embed_Cg(s, rho), embed_Cg(s, sigma)) == pytest.approx(direct, abs=1e-9)

    def test_g_asymmetry(self, rng, su2_space):
        rho = random_density_matrix(su2_space, rng)
        assert g_asymmetry(rho) > 0
        assert g_asymmetry(twirl(rho)) == pytest.approx(0.0, abs=1e-10)

    def test_g_asymmetry_vanishes_iff_invariant(self, rng, su2_space):
        rho = random_density_matrix(su2_space, rng, rank=2)
        for state in (rho, twirl(rho)):
            assert (g_asymmetry(state) <= 1e-10) == (twirl_distance(state) <= 1e-10)

    def test_g_asymmetry_of_two_irrep_superposition(self):
        # (|1/2;1/2> + |1;0>)/sqrt(2): the twirl spreads each half evenly over its irrep
        space = SpaceSpec.from_irreps(GroupKind.SU2, (1, 2))
        psi = np.zeros(space.dim, dtype=complex)
        psi[space.index((1, 0), 1)] = 1
        psi[space.index((2, 0), 0)] = 1
        rho = DensityMatrix.from_vector(space, psi)
        expected = 0.5 * np.log2(2 * 2) + 0.5 * np.log2(2 * 3)
        assert von_neumann_entropy(twirl(rho)) == pytest.approx(expected, abs=1e-12)
        assert g_asymmetry(rho) == pytest.approx(expected, abs=1e-10)

    def test_twirl_minimizes_relative_entropy_to_invariant_states(self, rng, su2_space):
        rho = random_density_matrix(su2_space, rng)
        a_g = g_asymmetry(rho)
        assert relative_entropy(rho, twirl(rho)) == pytest.approx(a_g, abs=1e-9)
        for _ in range(10):
            sigma = twirl(random_density_matrix(su2_space, rng))
            assert relative_entropy(rho, sigma) >= a_g - 1e-9


class TestAsymmetryMonotones:
    def test_sup_detects_z_polarized_state(self, spin_half):
        up = DensityMatrix.basis_state(spin_half, (1, 0), 1)
        identity = GroupElement.identity(GroupKind.SU2)
        assert asymmetry_monotone('negativity', identity, up) == pytest.approx(0.0, abs=1e-14)
        assert asymmetry_monotone('negativity', rotation_to_x(), up) == pytest.approx(0.5, abs=1e-12)
        assert asymmetry_sup('negativity', up) == pytest.approx(0.5, abs=1e-12)

    def test_sup_vanishes_on_invariant_states(self, rng, su2_space):
        rho = twirl(random_density_matrix(su2_space, rng))
        assert asymmetry_sup('negativity', rho) < 1e-10
        assert asymmetry_sup('log_negativity', rho) < 1e-10

    @pytest.mark.parametrize('seed', range(6))
    def test_monotone_under_random_channels(self, su2_space, seed):
        rng = np.random.default_rng(seed)
        twice_J = 2 if su2_space.dim > 2 else 0
        channel = random_covariant_channel(su2_space, twice_J, 1 + seed % 2, seed)
        report = monotonicity_check(random_density_matrix(su2_space, rng), channel)
        assert report.passed, report.rows
        assert len(report.rows) == 4

    def test_monotone_on_counterexample_input(self, counterexample_space):
        psi = DensityMatrix.basis_state(counterexample_space, (1, 0), 1)
        report = monotonicity_check(psi, uniform_covariant_channel(counterexample_space, 1))
        assert report.passed

    def test_truncating_channel_is_rejected(self):
        space = charge_space((0, 1))
        table = ReducedElementTable(1, 1, {(0, (1, 0), (0, 0)): 1.0}, GroupKind.U1)
        family = abelian_kraus(space, 1, table, truncate=True)
        channel = CovariantChannel(((1.0, family),), strict=False)
        assert channel.truncating
        with pytest.raises(ChannelError):
            monotonicity_check(DensityMatrix.maximally_mixed(space), channel)

    def test_ensemble_average(self, rng, counterexample_space):
        channel = random_covariant_channel(counterexample_space, 1, 2, 21)
        rho = random_density_matrix(counterexample_space, rng)
        for s in finite_set(counterexample_space):
            assert ensemble_average_check('negativity', s, rho, channel).passed

    def test_frame_names(self, rng, counterexample_space):
        channel = uniform_covariant_channel(counterexample_space, 1)
        rho = random_density_matrix(counterexample_space, rng)
        frames = [ensemble_average_check('negativity', s, rho, channel).rows[0].frame
                  for s in finite_set(counterexample_space)]
        assert frames == ['ensemble C', 'ensemble C_Ry(pi/2)']
        g = GroupElement.su2(0.5, 1.0, 2.0)
        report = ensemble_average_check('negativity', g, rho, channel)
        assert report.rows[0].frame == 'ensemble C_g(0.5,1,2)'
        assert report.passed

    def test_conservation_under_covariant_unitary(self, rng, multiplicity_space):
        rho = random_density_matrix(multiplicity_space, rng)
        report = conservation_check(rho, random_covariant_unitary(multiplicity_space, 4), tol=1e-9)
        assert report.passed, report.rows
        assert {row.frame for row in report.rows} == {'C', 'C_Ry(pi/2)', 'L'}

    def test_conservation_rejects_non_unitary(self, rng, counterexample_space):
        channel = uniform_covariant_channel(counterexample_space, 1)
        with pytest.raises(ChannelError):
            conservation_check(random_density_matrix(counterexample_space, rng), channel)

    def test_generator_expectations_conserved(self, rng, multiplicity_space):
        rho = random_density_matrix(multiplicity_space, rng)
        unitary = random_covariant_unitary(multiplicity_space, 6).unitary()
        before = generator_expectations(rho)
        after = generator_expectations(rho.conjugate_by(unitary))
        for name in ('J_x', 'J_y', 'J_z'):
            assert after[name] == pytest.approx(before[name], abs=1e-10)


class TestClosedForms:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([(0, 1, 2), (1, 3), (1, 1, 3), (0, 2, 4)]))
    def test_pure_state_trace_norm(self, seed, irreps):
        space = SpaceSpec.from_irreps(GroupKind.SU2, irreps)
        rng = np.random.default_rng(seed)
        pure = random_standard_form_state(space, rng)
        assert pure_state_trace_norm(pure) == pytest.approx(pt_trace_norm(embed_C(pure)), abs=1e-10)

    def test_closed_form_for_general_pure_state(self, rng, multiplicity_space):
        psi = rng.normal(size=multiplicity_space.dim) + 1j * rng.normal(size=multiplicity_space.dim)
        pure = DensityMatrix.from_vector(multiplicity_space, psi)
        assert pure_state_trace_norm(pure) == pytest.approx(pt_trace_norm(embed_C(pure)), abs=1e-10)

    def test_closed_form_rejects_mixed_state(self, counterexample_space):
        with pytest.raises(DomainError):
            pure_state_trace_norm(DensityMatrix.maximally_mixed(counterexample_space))

    def test_display_discrepancy_logged_once(self, caplog, spin_half):
        import covasym.monotones as monotones
        monotones._display_warned = False
        pure = DensityMatrix.from_vector(spin_half, [1, 1])
        with caplog.at_level(logging.WARNING, logger='covasym.monotones'):
            pure_state_trace_norm(pure)
            pure_state_trace_norm(pure)
        assert sum('pairwise A_N display' in r.getMessage() for r in caplog.records) == 1


class TestReeBounds:
    def test_bounds_bracket_g_asymmetry(self, rng, counterexample_space):
        rho = random_density_matrix(counterexample_space, rng)
        for s in finite_set(counterexample_space):
            bounds = ree_bounds(rho, s)
            assert bounds.lower <= bounds.g_asymmetry + 1e-9
            assert bounds.witness_values[0] == pytest.approx(bounds.g_asymmetry, abs=1e-9)
            assert bounds.upper <= bounds.witness_values[0]

    def test_extra_witness_is_used(self, spin_half):
        rho = DensityMatrix.from_vector(spin_half, [1, 1])
        image = embed_C(rho)
        witness = BipartiteState(np.diag([0.5, 0, 0, 0.5]).astype(complex), image.cut)
        bounds = ree_bounds(rho, witnesses=(witness,))
        assert bounds.lower == pytest.approx(1.0)
        assert bounds.upper == pytest.approx(1.0)
        assert len(bounds.witness_values) == 2
