import numpy as np
import pytest

from covasym.repkit import GroupKind, SpaceSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def spin_half():
    return SpaceSpec.from_irreps(GroupKind.SU2, (1,))


@pytest.fixture
def counterexample_space():
    '''{0, 1/2, 1}'''
    return SpaceSpec.from_irreps(GroupKind.SU2, (0, 1, 2))


@pytest.fixture
def multiplicity_space():
    '''{1/2, 1/2', 3/2}: two copies of spin 1/2'''
    return SpaceSpec.from_irreps(GroupKind.SU2, (1, 1, 3))


@pytest.fixture(params=[(1,), (0, 2), (1, 1), (0, 1, 2), (1, 3), (0, 2, 2)],
                ids=lambda irreps: 'SU2' + str(list(irreps)))
def su2_space(request):
    return SpaceSpec.from_irreps(GroupKind.SU2, request.param)


@pytest.fixture(params=[(0, 1), (-1, 0, 1), (0, 0, 1)], ids=lambda charges: 'U1' + str(list(charges)))
def u1_space(request):
    return SpaceSpec.from_irreps(GroupKind.U1, request.param)
