import numpy as np
import pytest
from numpy.testing import assert_allclose

from covasym.channels import (CovariantChannel, CovariantKrausFamily, DensityMatrix, KrausOperator,
                              ReducedElementTable, apply_channel, branch_channels, branch_output,
                              covariance_residual, expand_kraus, normalize_family,
                              random_covariant_channel, random_covariant_unitary, random_density_matrix,
                              selection_pairs, symmetric_hamiltonian_unitary, tensor_operator_residual, twirl,
                              uniform_covariant_channel)
from covasym.errors import ChannelError, DomainError, SingularFamilyError
from covasym.repkit import GroupElement, GroupKind, SectorKey, SpaceSpec, generators, representation_matrix


def _ranks(space):
    limit = (-2, -1, 0, 1, 2) if space.group is GroupKind.U1 else (0, 1, 2, 3, 4)
    return [j for j in limit if selection_pairs(space, j)]

def _dense_residual(channel, g):
    '''same residual through the dim^2 x dim^2 superoperator, for small spaces only'''
    u = representation_matrix(channel.space, g)
    s = sum(np.kron(k, k.conj()) for k in channel.kraus_operators())
    ug = np.kron(u, u.conj())
    dim = channel.space.dim
    diff = (s @ ug - ug @ s).T.reshape(dim * dim, dim, dim)
    return float(np.max(np.linalg.norm(diff, ord=2, axis=(1, 2))))

def _doubled_entry(channel):
    '''non-covariant copy: the largest Kraus element between non-trivial irreps doubled'''
    weight, family = channel.components[0]
    space = family.space
    candidates = [(abs(value), n, r, c) for n, k in enumerate(family.kraus)
                  for (r, c), value in np.ndenumerate(k.matrix)
                  if space.label(r).sector.irrep > 0 and space.label(c).sector.irrep > 0]
    _, n, r, c = max(candidates)
    kraus = list(family.kraus)
    matrix = kraus[n].matrix.copy()
    matrix[r, c] *= 2
    kraus[n] = KrausOperator(kraus[n].twice_M, kraus[n].alpha, matrix)
    broken = CovariantKrausFamily(space, family.reduced, tuple(kraus))
    return CovariantChannel(((weight, broken),) + channel.components[1:], strict=False)


class TestDensityMatrix:
    def test_rejects_invalid_matrices(self, spin_half):
        with pytest.raises(DomainError):
            DensityMatrix(spin_half, np.eye(2))
        with pytest.raises(DomainError):
            DensityMatrix(spin_half, np.array([[0.5, 0.5], [0.1, 0.5]]))
        with pytest.raises(DomainError):
            DensityMatrix(spin_half, np.diag([1.2, -0.2]))
        with pytest.raises(DomainError):
            DensityMatrix(spin_half, np.eye(3) / 3)

    def test_random_state_has_requested_rank(self, rng, counterexample_space):
        rho = random_density_matrix(counterexample_space, rng, rank=2)
        evals = np.linalg.eigvalsh(rho.matrix)
        assert np.sum(evals > 1e-10) == 2
        assert_allclose(np.trace(rho.matrix), 1.0)

    def test_dict_round_trip(self, rng, spin_half):
        rho = random_density_matrix(spin_half, rng)
        assert_allclose(DensityMatrix.from_dict(rho.to_dict()).matrix, rho.matrix)


class TestTwirl:
    def test_twirl_is_invariant_and_idempotent(self, rng, su2_space):
        rho = random_density_matrix(su2_space, rng)
        twirled = twirl(rho)
        gens = generators(su2_space)
        for name in ('J_x', 'J_y', 'J_z'):
            assert_allclose(twirled.matrix @ gens[name], gens[name] @ twirled.matrix, atol=1e-12)
        assert twirled.distance(twirl(twirled)) < 1e-12

    def test_twirl_matches_group_average_on_spin_half(self, rng, spin_half):
        rho = random_density_matrix(spin_half, rng)
        assert_allclose(twirl(rho).matrix, np.eye(2) / 2, atol=1e-14)

    def test_twirl_keeps_multiplicity_coherence(self, multiplicity_space):
        psi = np.zeros(multiplicity_space.dim, dtype=complex)
        psi[multiplicity_space.index((1, 0), 1)] = 1
        psi[multiplicity_space.index((1, 1), 1)] = 1
        twirled = twirl(DensityMatrix.from_vector(multiplicity_space, psi))
        a, b = multiplicity_space.index((1, 0), -1), multiplicity_space.index((1, 1), -1)
        assert_allclose(twirled.matrix[a, b], 0.25, atol=1e-14)


class TestReducedTable:
    def test_triangle_rule_enforced(self):
        with pytest.raises(DomainError):
            ReducedElementTable(1, 1, {(0, (0, 0), (0, 0)): 1.0})
        with pytest.raises(DomainError):
            ReducedElementTable(2, 1, {(1, (2, 0), (2, 0)): 1.0})

    def test_u1_rule_is_charge_shift(self):
        table = ReducedElementTable(1, 1, {(0, (1, 0), (0, 0)): 1.0}, GroupKind.U1)
        assert table.allows(1, 0) and not table.allows(0, 1)

    def test_dict_round_trip(self):
        table = ReducedElementTable(1, 2, {(0, (2, 0), (1, 0)): 0.5 - 1j, (1, (0, 0), (1, 0)): 2.0})
        back = ReducedElementTable.from_dict(table.to_dict())
        assert back.entries == table.entries
        assert back.alpha_count == 2

    def test_expand_rejects_absent_sector(self, spin_half):
        table = ReducedElementTable(1, 1, {(0, (2, 0), (1, 0)): 1.0})
        with pytest.raises(DomainError):
            expand_kraus(spin_half, table)


class TestNormalization:
    def test_singular_family_names_unsupported_sectors(self, counterexample_space):
        table = ReducedElementTable(1, 1, {(0, (2, 0), (1, 0)): 1.0})
        with pytest.raises(SingularFamilyError) as info:
            normalize_family(expand_kraus(counterexample_space, table))
        assert set(info.value.sectors) == {SectorKey(0, 0), SectorKey(2, 0)}

    def test_unnormalized_family_is_not_a_channel(self, counterexample_space):
        table = ReducedElementTable(1, 1, {(0, o, i): 3.0 for o, i in selection_pairs(counterexample_space, 1)})
        with pytest.raises(ChannelError):
            CovariantChannel(((1.0, expand_kraus(counterexample_space, table)),))

    def test_uniform_channel_branch_superposition(self, counterexample_space):
        space = counterexample_space
        family = uniform_covariant_channel(space, 1).components[0][1]
        lowering = next(k.matrix for k in family.kraus if k.twice_M == -1)
        image = lowering[:, space.index((1, 0), 1)]
        assert_allclose(image[space.index((2, 0), 0)], image[space.index((0, 0), 0)], atol=1e-14)
        assert_allclose(abs(image[space.index((2, 0), 0)]), 0.5, atol=1e-14)


class TestCovariantChannels:
    def test_random_channels_are_complete_and_covariant(self, su2_space):
        rng = np.random.default_rng(7)
        for seed, twice_J in enumerate(_ranks(su2_space)):
            channel = random_covariant_channel(su2_space, twice_J, 2, seed)
            assert channel.completeness_residual() < 1e-10
            for _ in range(5):
                g = GroupElement.random(GroupKind.SU2, rng)
                assert covariance_residual(channel, g) < 1e-10
                assert tensor_operator_residual(channel.components[0][1], g) < 1e-10

    def test_u1_channels_are_covariant(self, u1_space):
        rng = np.random.default_rng(3)
        for seed, shift in enumerate(_ranks(u1_space)):
            channel = random_covariant_channel(u1_space, shift, 1, seed)
            g = GroupElement.random(GroupKind.U1, rng)
            assert channel.completeness_residual() < 1e-10
            assert covariance_residual(channel, g) < 1e-10
            assert tensor_operator_residual(channel.components[0][1], g) < 1e-10

    def test_residual_agrees_with_superoperator_form(self, rng, counterexample_space):
        channel = random_covariant_channel(counterexample_space, 1, 2, 13)
        broken = _doubled_entry(channel)
        for _ in range(3):
            g = GroupElement.random(GroupKind.SU2, rng)
            assert covariance_residual(channel, g) == pytest.approx(_dense_residual(channel, g), abs=1e-12)
            assert covariance_residual(broken, g) == pytest.approx(_dense_residual(broken, g), rel=1e-9)
            assert covariance_residual(broken, g) > 1e-3

    def test_residual_on_large_space(self, rng):
        space = SpaceSpec.from_irreps(GroupKind.SU2, (16,) * 8)
        assert space.dim >= 100
        unitary = random_covariant_unitary(space, 17)
        assert covariance_residual(unitary, GroupElement.random(GroupKind.SU2, rng)) < 1e-10

    def test_gram_commutes_with_representation(self, rng, multiplicity_space):
        family = random_covariant_channel(multiplicity_space, 2, 1, 11).components[0][1]
        gram = family.gram()
        u = representation_matrix(multiplicity_space, GroupElement.random(GroupKind.SU2, rng))
        assert_allclose(gram @ u, u @ gram, atol=1e-10)

    def test_apply_channel_keeps_trace(self, rng, counterexample_space):
        channel = random_covariant_channel(counterexample_space, 2, 1, 5)
        out = apply_channel(channel, random_density_matrix(counterexample_space, rng))
        assert_allclose(np.trace(out.matrix), 1.0, atol=1e-12)

    def test_channel_commutes_with_twirl(self, rng, counterexample_space):
        channel = random_covariant_channel(counterexample_space, 1, 2, 9)
        rho = random_density_matrix(counterexample_space, rng)
        assert apply_channel(channel, twirl(rho)).distance(twirl(apply_channel(channel, rho))) < 1e-10

    def test_branch_probabilities_sum_to_one(self, rng, counterexample_space):
        channel = random_covariant_channel(counterexample_space, 2, 2, 4)
        rho = random_density_matrix(counterexample_space, rng)
        total = sum(branch_output(branch, rho)[0] for branch in branch_channels(channel))
        assert_allclose(total, 1.0, atol=1e-10)

    def test_covariant_unitaries(self, multiplicity_space):
        for unitary in (random_covariant_unitary(multiplicity_space, 1),
                        symmetric_hamiltonian_unitary(multiplicity_space, 2, time=0.8)):
            assert unitary.is_unitary()
            assert covariance_residual(unitary, GroupElement.su2(0.3, 1.1, -0.4)) < 1e-10

    def test_non_unitary_channel_has_no_unitary(self, counterexample_space):
        with pytest.raises(ChannelError):
            uniform_covariant_channel(counterexample_space, 1).unitary()
