import numpy as np
import pytest
from numpy.testing import assert_allclose

from covasym.channels import (DensityMatrix, apply_channel, random_covariant_channel, random_density_matrix,
                              twirl, uniform_covariant_channel)
from covasym.embed import (BipartiteState, WeightRegister, coherence_criterion, embed_C, embed_Cg, embed_L,
                           invariance_via_finite_set, isometry_C, isometry_Cg, isometry_L, l_factor_bases,
                           l_reproduction_residual, l_side_kraus, locc_simulated_kraus, locc_simulation_residual,
                           pinch_rho_bar, pinch_sigma_bar, pinched_product_decomposition, projector_set,
                           twirl_distance)
from covasym.errors import DomainError, RegisterError
from covasym.monotones import negativity
from covasym.repkit import GroupElement, GroupKind, SpaceSpec, finite_set, representation_matrix, rotation_to_x


class TestWeightRegister:
    def test_for_space_picks_step(self, spin_half, counterexample_space):
        assert WeightRegister.for_space(spin_half) == WeightRegister(-1, 1, 2)
        assert WeightRegister.for_space(spin_half, 1) == WeightRegister(-3, 3, 2)
        assert WeightRegister.for_space(counterexample_space).step == 1
        assert WeightRegister.for_space(counterexample_space, 1).dim == 7

    def test_invalid_ranges_raise(self):
        with pytest.raises(RegisterError):
            WeightRegister(0, 3, 2)
        with pytest.raises(RegisterError):
            WeightRegister(1, -1, 2)
        with pytest.raises(RegisterError):
            WeightRegister(-1, 1, 3)

    def test_register_must_cover_weights(self):
        spin_one = SpaceSpec.from_irreps(GroupKind.SU2, (2,))
        with pytest.raises(RegisterError):
            isometry_C(spin_one, WeightRegister(-1, 1, 1))

    def test_shift_operator_is_partial_isometry(self):
        t = WeightRegister(-2, 2, 2).shift_operator(2)
        assert_allclose(t @ t.conj().T @ t, t)
        assert int(np.trace(t.conj().T @ t).real) == 2

    def test_shift_is_isometric_on_reachable_weights(self, counterexample_space):
        register = WeightRegister.for_space(counterexample_space, 1)
        source = np.zeros((register.dim, register.dim))
        for w in counterexample_space.weights():
            source[register.index(w), register.index(w)] = 1
        for shift in (-1, 0, 1):
            t = register.shift_operator(shift)
            assert_allclose(t.conj().T @ t @ source, source, atol=1e-15)


class TestIsometries:
    def test_columns_are_orthonormal(self, su2_space):
        for iso in (isometry_C(su2_space), isometry_Cg(su2_space, rotation_to_x()), isometry_L(su2_space)):
            assert_allclose(iso.matrix.conj().T @ iso.matrix, np.eye(su2_space.dim), atol=1e-12)

    def test_cg_at_identity_is_c(self, rng, multiplicity_space):
        rho = random_density_matrix(multiplicity_space, rng)
        identity = GroupElement.identity(GroupKind.SU2)
        assert_allclose(embed_Cg(identity, rho).matrix, embed_C(rho).matrix, atol=1e-14)

    def test_cg_image_of_basis_state(self, rng):
        # C_g|j,lambda;m> = sum_m' D_{m'm}(g^-1) U(g)|j,lambda;m'> (x) |m'>
        space = SpaceSpec.from_irreps(GroupKind.SU2, (1, 2, 2))
        g = GroupElement.random(GroupKind.SU2, rng)
        u = representation_matrix(space, g)
        d_inv = representation_matrix(space, g.inverse())
        c = isometry_C(space).matrix
        register_dim = isometry_C(space).cut[1]
        for col, label in enumerate(space.basis):
            image = np.zeros(space.dim * register_dim, dtype=complex)
            for row in range(space.dim):
                image += d_inv[row, col] * (np.kron(u, np.eye(register_dim)) @ c[:, row])
            rho = DensityMatrix.basis_state(space, label.sector, label.weight)
            assert_allclose(embed_Cg(g, rho).matrix, np.outer(image, image.conj()), atol=1e-12)

    def test_weight_superposition_becomes_bell_state(self, spin_half):
        rho = DensityMatrix.from_vector(spin_half, [1, 1])
        image = embed_C(rho)
        assert image.cut == (2, 2)
        assert_allclose(negativity(image), 0.5, atol=1e-12)

    def test_basis_state_image_is_product(self, counterexample_space):
        rho = DensityMatrix.basis_state(counterexample_space, (2, 0), 0)
        assert negativity(embed_C(rho)) == pytest.approx(0.0, abs=1e-14)
        assert negativity(embed_L(rho)) == pytest.approx(0.0, abs=1e-14)

    def test_l_cut_dimensions(self, multiplicity_space):
        m_basis, n_basis = l_factor_bases(multiplicity_space)
        assert len(m_basis) == 2 + 4
        assert len(n_basis) == 3
        assert isometry_L(multiplicity_space).cut == (6, 3)

    def test_apply_rejects_foreign_state(self, rng, spin_half, counterexample_space):
        rho = random_density_matrix(spin_half, rng)
        with pytest.raises(DomainError):
            isometry_C(counterexample_space).apply(rho)

    def test_bipartite_reduced_states(self):
        a = np.diag([0.25, 0.75]).astype(complex)
        b = np.diag([1.0, 0.0, 0.0]).astype(complex)
        state = BipartiteState.product(a, b)
        assert_allclose(state.reduced('A'), a)
        assert_allclose(state.reduced('B'), b)
        with pytest.raises(DomainError):
            state.reduced('C')


class TestLoccSimulation:
    @pytest.mark.parametrize('twice_J', [0, 1, 2])
    def test_identity_holds_in_every_frame(self, counterexample_space, twice_J):
        channel = random_covariant_channel(counterexample_space, twice_J, 2, 100 + twice_J)
        for s in finite_set(counterexample_space):
            assert locc_simulation_residual(channel, s) < 1e-10

    def test_identity_holds_for_random_element(self, rng, multiplicity_space):
        channel = random_covariant_channel(multiplicity_space, 2, 1, 8)
        g = GroupElement.random(GroupKind.SU2, rng)
        assert locc_simulation_residual(channel, g) < 1e-10

    def test_local_kraus_are_products(self, counterexample_space):
        family = random_covariant_channel(counterexample_space, 1, 1, 30).components[0][1]
        register = WeightRegister.for_space(counterexample_space, family.max_shift())
        local = locc_simulated_kraus(family, register)
        assert len(local) == len(family.kraus)
        for op, k in zip(local, family.kraus):
            assert_allclose(op, np.kron(k.matrix, register.shift_operator(k.twice_M)), atol=1e-14)

    def test_l_side_kraus_follow_family(self, counterexample_space):
        family = random_covariant_channel(counterexample_space, 1, 1, 31).components[0][1]
        cut = isometry_L(counterexample_space).cut
        composite = l_side_kraus(family)
        assert [(m, a) for m, a, _ in composite] == [(k.twice_M, k.alpha) for k in family.kraus]
        assert all(op.shape == (cut[0] * cut[1],) * 2 for _, _, op in composite)

    def test_identity_holds_on_u1(self, u1_space):
        channel = random_covariant_channel(u1_space, 1, 1, 2)
        assert locc_simulation_residual(channel) < 1e-10

    def test_l_side_reproduces_channel(self, rng, su2_space):
        channel = random_covariant_channel(su2_space, 2 if su2_space.dim > 2 else 0, 1, 12)
        rho = random_density_matrix(su2_space, rng)
        assert l_reproduction_residual(channel, rho) < 1e-10


class TestInvariance:
    def test_finite_set_agrees_with_twirl(self, rng, su2_space):
        for _ in range(5):
            rho = random_density_matrix(su2_space, rng)
            assert not invariance_via_finite_set(rho)
            assert twirl_distance(rho) > 1e-6
            assert invariance_via_finite_set(twirl(rho))

    def test_identity_frame_alone_is_not_enough(self, spin_half):
        up = DensityMatrix.basis_state(spin_half, (1, 0), 1)
        assert coherence_criterion(up).invariant_weights
        assert not invariance_via_finite_set(up)

    def test_coherence_matches_ppt_on_qubit(self, rng, spin_half):
        rho = random_density_matrix(spin_half, rng)
        report = coherence_criterion(rho)
        assert not report.invariant_weights
        assert report.max_commutator_norm > 0
        assert negativity(embed_C(rho)) > 1e-6
        assert negativity(embed_C(twirl(rho))) < 1e-12


class TestPinching:
    def test_projector_set(self, counterexample_space):
        projectors = projector_set(counterexample_space)
        assert sorted(projectors.pi_m) == [-2, -1, 0, 1, 2]
        total = sum(projectors.pi_j.values())
        assert_allclose(total @ projectors.pi_W, projectors.pi_W, atol=1e-14)

    def test_counterexample_creates_l_entanglement(self, counterexample_space):
        channel = uniform_covariant_channel(counterexample_space, 1)
        psi = DensityMatrix.basis_state(counterexample_space, (1, 0), 1)
        assert negativity(embed_L(psi)) == pytest.approx(0.0, abs=1e-14)
        assert negativity(embed_L(apply_channel(channel, psi))) == pytest.approx(0.25, abs=1e-10)

    def test_phi_example(self):
        space = SpaceSpec.from_irreps(GroupKind.SU2, (0, 1, 2, 3, 4))
        psi = np.zeros(space.dim, dtype=complex)
        psi[space.index((3, 0), 1)] = 1
        psi[space.index((1, 0), 1)] = 1
        phi = DensityMatrix.from_vector(space, psi)
        channel = uniform_covariant_channel(space, 1)
        assert negativity(embed_L(phi)) == pytest.approx(0.5, abs=1e-12)
        rho_bar = pinch_rho_bar(phi)
        assert negativity(rho_bar) == pytest.approx(0.0, abs=1e-12)
        sigma_bar = pinch_sigma_bar(channel, phi)
        assert negativity(embed_L(phi)) >= negativity(sigma_bar) - 1e-9
        assert sigma_bar.raw_trace > 0

    def test_product_decomposition_rebuilds_state(self, rng):
        space = SpaceSpec.from_irreps(GroupKind.SU2, (0, 1, 2))
        rho = random_density_matrix(space, rng)
        sigma_bar = pinch_sigma_bar(random_covariant_channel(space, 2, 1, 3), rho)
        terms = pinched_product_decomposition(sigma_bar, space)
        assert terms is not None
        rebuilt = sum(p * np.kron(a, b) for p, a, b in terms)
        assert_allclose(rebuilt, sigma_bar.matrix, atol=1e-10)

    def test_decomposition_gives_up_with_multiplicity(self, multiplicity_space):
        psi = np.zeros(multiplicity_space.dim, dtype=complex)
        psi[multiplicity_space.index((1, 0), 1)] = 1
        psi[multiplicity_space.index((1, 1), -1)] = 1
        rho_bar = pinch_rho_bar(DensityMatrix.from_vector(multiplicity_space, psi))
        assert pinched_product_decomposition(rho_bar, multiplicity_space) is None
