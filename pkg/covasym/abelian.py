import logging
from typing import NamedTuple

import numpy as np

from .channels import (CovariantChannel, CovariantKrausFamily, DensityMatrix, ReducedElementTable,
                       expand_kraus, normalize_families)
from .config import DEFAULT_TOLERANCES
from .embed import (WeightRegister, coherence_criterion, embed_C, embed_Cg, l_factor_bases, l_side_kraus,
                    locc_simulated_kraus, pinch_sigma_bar, pinched_product_decomposition, twirl_distance)
from .errors import DomainError, TruncationError
from .monotones import partial_transpose
from .repkit import GroupElement, GroupKind, SectorKey, SpaceSpec

__all__ = ['ChargeSector', 'charge_sectors', 'charge_space', 'charge_operator', 'abelian_kraus',
           'random_abelian_channel', 'relabeling_map', 'AbelianEquivalence', 'abelian_isometry_equivalence',
           'AbelianSeparability', 'abelian_separability_theorem']

logger = logging.getLogger(__name__)


class ChargeSector(NamedTuple):
    '''one-dimensional U(1) sector: its only weight is the charge'''
    charge_n: int
    lam: int

    def key(self) -> SectorKey:
        return SectorKey(self.charge_n, self.lam)


# helper functions
def _require_u1(space:SpaceSpec, what:str):
    if space.group is not GroupKind.U1:
        raise DomainError(f'{what} Error: needs a U1 space, got {space.describe()}')

def _stray_sectors(space:SpaceSpec, shift:int) -> list:
    '''sectors whose shifted charge has no sector in the space'''
    charges = set(space.irreps())
    return [s for s in space.sectors if s.irrep + shift not in charges]


def charge_sectors(space:SpaceSpec) -> list:
    '''the sectors of a U1 space as ChargeSectors, in basis order'''
    _require_u1(space, 'Charge')
    return [ChargeSector(s.irrep, s.lam) for s in space.sectors]

def charge_space(charges) -> SpaceSpec:
    '''U1 space from a list of charges; repeated charges get lambda = 0, 1, ...'''
    counts, sectors = {}, []
    for n in charges:
        sectors.append(ChargeSector(int(n), counts.get(int(n), 0)))
        counts[int(n)] = sectors[-1].lam + 1
    return SpaceSpec(GroupKind.U1, tuple(s.key() for s in sectors))

def charge_operator(space:SpaceSpec) -> np.ndarray:
    '''N = sum n |n,lambda><n,lambda|'''
    return np.diag([float(c.charge_n) for c in charge_sectors(space)]).astype(complex)


def abelian_kraus(space:SpaceSpec, shift:int, reduced:ReducedElementTable, truncate:bool=False) -> CovariantKrausFamily:
    ''' Charge-shift Kraus family K_{N,alpha} = sum_n c_{n,lambda,lambda'} |n+N,lambda'><n,lambda|

        Parameters
        ----------
            :param space: SpaceSpec - U1 space
            :param shift: int - charge shift N
            :param reduced: ReducedElementTable - U1 table with twice_J == N
            :param truncate: bool - allow shifts leaving the space; the family
                                    is then flagged as truncating
            :return: CovariantKrausFamily (unnormalized)
    '''
    _require_u1(space, 'Abelian')
    if reduced.group is not GroupKind.U1 or reduced.twice_J != shift:
        raise DomainError(f'Abelian Error: table must be a U1 table with shift {shift}')
    stray = _stray_sectors(space, shift)
    if stray and not truncate:
        raise TruncationError(f'Abelian Error: shift {shift:+d} takes sectors {stray} outside the space; '
                              'pass truncate=True to accept a trace-decreasing family')
    family = expand_kraus(space, reduced)
    if stray:
        logger.info('charge shift %+d truncates %d sector(s) of %s', shift, len(stray), space.describe())
        return CovariantKrausFamily(family.space, family.reduced, family.kraus, truncating=True)
    return family

def random_abelian_channel(space:SpaceSpec, seed:int, shifts=(-1, 0, 1), alpha_count:int=1,
                           tol:float=DEFAULT_TOLERANCES.channel) -> CovariantChannel:
    ''' Random U1-covariant channel mixing several charge shifts

        Each shift gets complex-Gaussian coefficients between the sectors it
        connects; the families are normalized jointly.
    '''
    _require_u1(space, 'Abelian')
    rng = np.random.default_rng(seed)
    families = []
    for shift in shifts:
        entries = {}
        for alpha in range(alpha_count):
            for inp in space.sectors:
                for out in space.multiplicity_sectors(inp.irrep + shift):
                    entries[(alpha, out, inp)] = complex(rng.normal(), rng.normal()) / np.sqrt(2)
        if entries:
            families.append(expand_kraus(space, ReducedElementTable(shift, alpha_count, entries, GroupKind.U1)))
    if not families:
        raise DomainError(f'Abelian Error: no shift in {shifts} connects two sectors of {space.describe()}')
    return CovariantChannel(tuple((1.0, fam) for fam in normalize_families(families, tol)), tol=tol)


def relabeling_map(space:SpaceSpec, register:WeightRegister) -> np.ndarray:
    ''' Local relabeling W: |n,lambda>_A |w>_B -> |w>_M |n,lambda>_N

        Register weights that are not charges of the space are sent to zero,
        so W is a partial isometry that is exact on the C image.
    '''
    _require_u1(space, 'Abelian')
    m_basis, n_basis = l_factor_bases(space)
    m_index = {charge: i for i, (charge, _) in enumerate(m_basis)}
    w = np.zeros((len(m_basis) * len(n_basis), space.dim * register.dim), dtype=complex)
    for s in range(space.dim):
        for weight in register.weights():
            if weight in m_index:
                w[m_index[weight] * len(n_basis) + s, s * register.dim + register.index(weight)] = 1
    return w


class AbelianEquivalence(NamedTuple):
    cg_deviation: float
    kraus_deviation: float
    passed: bool

def abelian_isometry_equivalence(rho:DensityMatrix, channel:CovariantChannel=None, thetas=None,
                                 tol:float=DEFAULT_TOLERANCES.construction) -> AbelianEquivalence:
    ''' C_g equals C on U1, and W maps the C-side Kraus set onto the L-side set

        :param rho: DensityMatrix - state on a U1 space
        :param channel: CovariantChannel - channel whose Kraus sets are compared
                                           (a seed-0 random abelian channel when None)
        :param thetas: iterable - angles for the C_g comparison (20 seeded angles when None)
        :param tol: float - tolerance on both deviations
    '''
    space = rho.space
    _require_u1(space, 'Abelian')
    thetas = np.random.default_rng(0).uniform(0, 2 * np.pi, 20) if thetas is None else thetas
    image = embed_C(rho).matrix
    cg_dev = max((float(np.max(np.abs(embed_Cg(GroupElement.u1(t), rho).matrix - image))) for t in thetas),
                 default=0.0)
    channel = random_abelian_channel(space, 0) if channel is None else channel
    register = WeightRegister.for_space(space, channel.max_shift())
    w = relabeling_map(space, register)
    kraus_dev = 0.0
    for _, family in channel.components:
        local = locc_simulated_kraus(family, register)
        for composite, (_, _, l_side) in zip(local, l_side_kraus(family)):
            kraus_dev = max(kraus_dev, float(np.max(np.abs(w @ composite @ w.conj().T - l_side))))
    return AbelianEquivalence(cg_dev, kraus_dev, cg_dev <= tol and kraus_dev <= tol)


class AbelianSeparability(NamedTuple):
    invariant: bool
    coherent: bool
    image_entangled: bool
    sigma_bar_separable: bool
    decomposition_residual: float

    @property
    def holds(self) -> bool:
        return (self.coherent == self.image_entangled == (not self.invariant)) and self.sigma_bar_separable

def abelian_separability_theorem(rho:DensityMatrix, channel:CovariantChannel=None,
                                 tol:float=DEFAULT_TOLERANCES.channel) -> AbelianSeparability:
    ''' C(rho) is separable iff rho is invariant, and sigma_bar is always separable

        Entanglement of the C image is read off the partial transpose; the
        separability of sigma_bar is certified by its explicit product
        decomposition.
    '''
    _require_u1(rho.space, 'Abelian')
    invariant = twirl_distance(rho) <= tol
    coherent = not coherence_criterion(rho, tol).invariant_weights
    entangled = bool(np.linalg.eigvalsh(partial_transpose(embed_C(rho)))[0] < -tol)
    channel = random_abelian_channel(rho.space, 0) if channel is None else channel
    sigma_bar = pinch_sigma_bar(channel, rho)
    terms = pinched_product_decomposition(sigma_bar, rho.space)
    if terms is None:
        return AbelianSeparability(invariant, coherent, entangled, False, float('inf'))
    rebuilt = sum(p * np.kron(a, b) for p, a, b in terms)
    residual = float(np.max(np.abs(rebuilt - sigma_bar.matrix)))
    return AbelianSeparability(invariant, coherent, entangled, residual <= tol, residual)
