import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh, expm
from scipy.stats import unitary_group

from .config import DEFAULT_TOLERANCES
from .errors import ChannelError, DomainError, SingularFamilyError
from .repkit import (GroupElement, GroupKind, SectorKey, SpaceSpec, cg_coefficient, generators,
                     is_valid_weight, representation_matrix, sector_weights, triangle)

__all__ = ['DensityMatrix', 'ReducedElementTable', 'KrausOperator', 'CovariantKrausFamily',
           'CovariantChannel', 'random_density_matrix', 'expand_kraus', 'normalize_family', 'normalize_families',
           'apply_channel', 'apply_kraus', 'branch_output', 'twirl',
           'covariance_residual', 'tensor_operator_residual', 'random_covariant_channel', 'random_covariant_unitary',
           'symmetric_hamiltonian_unitary', 'invariant_family', 'branch_channels', 'selection_pairs',
           'uniform_covariant_channel',
           'complex_to_pair', 'pair_to_complex']

logger = logging.getLogger(__name__)


# helper functions
def complex_to_pair(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]

def pair_to_complex(pair) -> complex:
    return complex(float(pair[0]), float(pair[1]))

def _matrix_to_rows(matrix:np.ndarray) -> list:
    return [[complex_to_pair(z) for z in row] for row in matrix]

def _rows_to_matrix(rows:list) -> np.ndarray:
    return np.array([[pair_to_complex(p) for p in row] for row in rows], dtype=complex)

def _check_same_space(a:SpaceSpec, b:SpaceSpec, what:str):
    if a != b:
        raise DomainError(f'{what} Error: space mismatch, {a.describe()} vs {b.describe()}')


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    ''' Density matrix on the flat basis of a SpaceSpec

        Parameters
        ----------
            :param space: SpaceSpec - Hilbert space the state lives on
            :param matrix: np.ndarray - dim x dim complex matrix
            :param tol: float - tolerance on hermiticity and trace; eigenvalues
                                must be >= -tol as well
    '''
    space: SpaceSpec
    matrix: np.ndarray
    tol: float = field(default=DEFAULT_TOLERANCES.negative, repr=False)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        dim = self.space.dim
        if matrix.shape != (dim, dim):
            raise DomainError(f'DensityMatrix Error: expected shape {(dim, dim)}, got {matrix.shape}')
        herm = np.max(np.abs(matrix - matrix.conj().T))
        if herm > max(self.tol * 1e-2, DEFAULT_TOLERANCES.construction):
            raise DomainError(f'DensityMatrix Error: matrix is not Hermitian (deviation {herm:.3e})')
        matrix = (matrix + matrix.conj().T) / 2
        trace = np.trace(matrix).real
        if abs(trace - 1) > self.tol:
            raise DomainError(f'DensityMatrix Error: trace is {trace!r}, expected 1')
        lowest = np.linalg.eigvalsh(matrix)[0]
        if lowest < -self.tol:
            raise DomainError(f'DensityMatrix Error: negative eigenvalue {lowest:.3e}')
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def from_vector(cls, space:SpaceSpec, psi):
        '''pure state |psi><psi|; psi is normalized first'''
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise DomainError('DensityMatrix Error: zero vector has no state')
        psi = psi / norm
        return cls(space, np.outer(psi, psi.conj()))

    @classmethod
    def basis_state(cls, space:SpaceSpec, sector, weight:int):
        '''|j,lambda;m><j,lambda;m|'''
        psi = np.zeros(space.dim, dtype=complex)
        psi[space.index(sector, weight)] = 1
        return cls.from_vector(space, psi)

    @classmethod
    def maximally_mixed(cls, space:SpaceSpec):
        return cls(space, np.eye(space.dim, dtype=complex) / space.dim)

    def conjugate_by(self, unitary:np.ndarray):
        '''U rho U^dag'''
        return DensityMatrix(self.space, unitary @ self.matrix @ unitary.conj().T, self.tol)

    def distance(self, other) -> float:
        '''operator-norm distance between two states on the same space'''
        _check_same_space(self.space, other.space, 'DensityMatrix')
        return float(np.linalg.norm(self.matrix - other.matrix, 2))

    def to_dict(self) -> dict:
        return {'space': self.space.to_dict(), 'matrix': _matrix_to_rows(self.matrix)}

    @classmethod
    def from_dict(cls, data:dict):
        return cls(SpaceSpec.from_dict(data['space']), _rows_to_matrix(data['matrix']))


def random_density_matrix(space:SpaceSpec, rng:np.random.Generator, rank:int=None) -> DensityMatrix:
    ''' Ginibre-ensemble random state

        :param space: SpaceSpec - target space
        :param rng: np.random.Generator - source of randomness
        :param rank: int - rank of the state (full rank when None)
        :return: DensityMatrix
    '''
    rank = space.dim if rank is None else rank
    if not 1 <= rank <= space.dim:
        raise DomainError(f'DensityMatrix Error: rank must lie in 1..{space.dim}, not {rank}')
    ginibre = rng.normal(size=(space.dim, rank)) + 1j * rng.normal(size=(space.dim, rank))
    matrix = ginibre @ ginibre.conj().T
    return DensityMatrix(space, matrix / np.trace(matrix).real)


@dataclass(frozen=True, eq=False)
class ReducedElementTable:
    ''' Reduced matrix elements <j',lambda'|| K_{J,alpha} ||j,lambda>

        Keys of `entries` are (alpha, sector_out, sector_in). For U1 tables
        `twice_J` holds the charge shift N (any sign) and the selection rule is
        n_out = n_in + N; for SU2 it is the doubled rank with the triangle rule.
    '''
    twice_J: int
    alpha_count: int
    entries: dict
    group: GroupKind = GroupKind.SU2

    def __post_init__(self):
        group = GroupKind(self.group)
        object.__setattr__(self, 'group', group)
        if group is GroupKind.SU2 and self.twice_J < 0:
            raise DomainError(f'Reduced Error: twice_J must be >= 0, not {self.twice_J}')
        if self.alpha_count < 1:
            raise DomainError(f'Reduced Error: alpha_count must be >= 1, not {self.alpha_count}')
        entries = {}
        for (alpha, out, inp), value in self.entries.items():
            out, inp = SectorKey(*out), SectorKey(*inp)
            if not 0 <= alpha < self.alpha_count:
                raise DomainError(f'Reduced Error: alpha {alpha} outside 0..{self.alpha_count - 1}')
            if not self.allows(out.irrep, inp.irrep):
                raise DomainError(f'Reduced Error: entry {out} <- {inp} violates the selection rule for twice_J={self.twice_J}')
            entries[(int(alpha), out, inp)] = complex(value)
        object.__setattr__(self, 'entries', entries)

    def allows(self, irrep_out:int, irrep_in:int) -> bool:
        '''selection rule between an input and an output irrep'''
        if self.group is GroupKind.U1:
            return irrep_out == irrep_in + self.twice_J
        return triangle(irrep_in, self.twice_J, irrep_out)

    def get(self, alpha:int, out, inp) -> complex:
        return self.entries.get((alpha, SectorKey(*out), SectorKey(*inp)), 0j)

    def restricted_to(self, alpha:int):
        '''one-alpha table, renumbered to alpha 0'''
        entries = {(0, o, i): v for (a, o, i), v in self.entries.items() if a == alpha}
        return ReducedElementTable(self.twice_J, 1, entries, self.group)

    def to_dict(self) -> dict:
        rows = [[a, list(o), list(i), complex_to_pair(v)] for (a, o, i), v in sorted(self.entries.items())]
        return {'group': self.group.value, 'twice_J': self.twice_J,
                'alpha_count': self.alpha_count, 'entries': rows}

    @classmethod
    def from_dict(cls, data:dict):
        entries = {(int(a), SectorKey(*o), SectorKey(*i)): pair_to_complex(v) for a, o, i, v in data['entries']}
        return cls(int(data['twice_J']), int(data['alpha_count']), entries,
                   GroupKind(data.get('group', 'SU2')))


class KrausOperator(NamedTuple):
    twice_M: int
    alpha: int
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class CovariantKrausFamily:
    ''' Irreducible tensor operators {K_{J,M,alpha}} generated from a reduced table

        `truncating` marks U1 families whose charge shift leaves the space;
        such families are trace decreasing.
    '''
    space: SpaceSpec
    reduced: ReducedElementTable
    kraus: tuple
    truncating: bool = False

    @property
    def twice_J(self) -> int:
        return self.reduced.twice_J

    def operators(self) -> list:
        return [k.matrix for k in self.kraus]

    def gram(self) -> np.ndarray:
        '''P = sum K^dag K'''
        return sum(k.matrix.conj().T @ k.matrix for k in self.kraus)

    def completeness_residual(self) -> float:
        return float(np.linalg.norm(self.gram() - np.eye(self.space.dim), 2))

    def max_shift(self) -> int:
        '''largest |twice_M| (SU2) or |N| (U1) carried by the family'''
        return max(abs(k.twice_M) for k in self.kraus)

    def to_dict(self) -> dict:
        return {'space': self.space.to_dict(), 'reduced': self.reduced.to_dict(),
                'truncating': self.truncating,
                'kraus': [[k.twice_M, k.alpha, _matrix_to_rows(k.matrix)] for k in self.kraus]}

    @classmethod
    def from_dict(cls, data:dict):
        kraus = tuple(KrausOperator(int(m), int(a), _rows_to_matrix(rows)) for m, a, rows in data['kraus'])
        return cls(SpaceSpec.from_dict(data['space']), ReducedElementTable.from_dict(data['reduced']),
                   kraus, bool(data.get('truncating', False)))


@dataclass(frozen=True, eq=False)
class CovariantChannel:
    ''' Weighted sum of covariant Kraus families

        Parameters
        ----------
            :param components: tuple - (weight, CovariantKrausFamily) pairs
            :param strict: bool - if True the pooled Kraus set must be complete
            :param tol: float - completeness tolerance
    '''
    components: tuple
    strict: bool = True
    tol: float = field(default=DEFAULT_TOLERANCES.channel, repr=False)

    def __post_init__(self):
        components = tuple((float(w), fam) for w, fam in self.components)
        if len(components) == 0:
            raise ChannelError('Channel Error: a channel needs at least one family')
        for weight, family in components:
            if weight < 0:
                raise ChannelError(f'Channel Error: component weight must be >= 0, not {weight}')
            _check_same_space(components[0][1].space, family.space, 'Channel')
        object.__setattr__(self, 'components', components)
        if self.strict:
            residual = self.completeness_residual()
            if residual > self.tol:
                raise ChannelError(f'Channel Error: pooled Kraus set is not complete (residual {residual:.3e})')

    @property
    def space(self) -> SpaceSpec:
        return self.components[0][1].space

    @property
    def truncating(self) -> bool:
        return any(fam.truncating for _, fam in self.components)

    def kraus_operators(self) -> list:
        '''pooled Kraus set sqrt(w) K'''
        return [np.sqrt(w) * k.matrix for w, fam in self.components for k in fam.kraus]

    def completeness_residual(self) -> float:
        gram = sum(k.conj().T @ k for k in self.kraus_operators())
        return float(np.linalg.norm(gram - np.eye(self.space.dim), 2))

    def max_shift(self) -> int:
        return max(fam.max_shift() for _, fam in self.components)

    def ranks(self) -> list:
        return sorted({fam.twice_J for _, fam in self.components})

    def is_unitary(self, tol:float=DEFAULT_TOLERANCES.construction) -> bool:
        '''single J=0 Kraus operator that is unitary'''
        kraus = self.kraus_operators()
        if len(kraus) != 1 or self.ranks() != [0]:
            return False
        return bool(np.linalg.norm(kraus[0].conj().T @ kraus[0] - np.eye(self.space.dim), 2) <= tol)

    def unitary(self) -> np.ndarray:
        if not self.is_unitary():
            raise ChannelError('Channel Error: channel is not a covariant unitary (single J=0 Kraus operator)')
        return self.kraus_operators()[0]

    def to_dict(self) -> dict:
        return {'components': [[w, fam.to_dict()] for w, fam in self.components]}


def expand_kraus(space:SpaceSpec, reduced:ReducedElementTable) -> CovariantKrausFamily:
    ''' Wigner-Eckart expansion of a reduced table into Kraus matrices

        <j',lambda';m'| K_{J,M,alpha} |j,lambda;m> = <j m; J M | j' m'> <j',lambda'||K_alpha||j,lambda>

        The family is returned unnormalized; see normalize_family.
    '''
    if reduced.group is not space.group:
        raise DomainError(f'Expand Error: {reduced.group.value} table used on a {space.group.value} space')
    for (_, out, inp) in reduced.entries:
        for sector in (out, inp):
            if not space.has_sector(sector):
                raise DomainError(f'Expand Error: table references sector {sector} absent from {space.describe()}')
    if space.group is GroupKind.U1:
        shifts = (reduced.twice_J,)
    else:
        shifts = sector_weights(GroupKind.SU2, reduced.twice_J)
    kraus = []
    for twice_M in shifts:
        for alpha in range(reduced.alpha_count):
            matrix = np.zeros((space.dim, space.dim), dtype=complex)
            for (a, out, inp), value in reduced.entries.items():
                if a != alpha or value == 0:
                    continue
                for tm in sector_weights(space.group, inp.irrep):
                    tm_out = tm + twice_M
                    if space.group is GroupKind.U1:
                        coeff = 1.0
                    elif is_valid_weight(out.irrep, tm_out):
                        coeff = cg_coefficient(inp.irrep, tm, reduced.twice_J, twice_M, out.irrep, tm_out)
                    else:
                        continue
                    matrix[space.index(out, tm_out), space.index(inp, tm)] += coeff * value
            kraus.append(KrausOperator(twice_M, alpha, matrix))
    return CovariantKrausFamily(space, reduced, tuple(kraus))


def _check_invariant(space:SpaceSpec, operator:np.ndarray, tol:float):
    '''raises if operator fails to commute with the Lie algebra (or charge) of the group'''
    if space.group is GroupKind.U1:
        tests = [np.diag([label.weight for label in space.basis]).astype(complex)]
    else:
        gens = generators(space)
        tests = [gens['J_z'], gens['J_plus']]
    scale = max(1.0, float(np.linalg.norm(operator, 2)))
    for gen in tests:
        residual = float(np.linalg.norm(operator @ gen - gen @ operator, 2))
        if residual > tol * scale:
            raise ChannelError(f'Normalize Error: P does not commute with the group action (residual {residual:.3e})')

def _transform_table(space:SpaceSpec, reduced:ReducedElementTable, right:np.ndarray) -> ReducedElementTable:
    ''' Reduced table of K R for an invariant R

        An invariant R acts as Q_j (x) I on each j-block, so
        r'(alpha, out, in) = sum_{in'} r(alpha, out, in') Q_j[in', in].
    '''
    entries = {}
    for (alpha, out, inp), value in reduced.entries.items():
        top = sector_weights(space.group, inp.irrep)[0]
        for target in space.multiplicity_sectors(inp.irrep):
            q = right[space.index(inp, top), space.index(target, top)]
            if q != 0:
                key = (alpha, out, target)
                entries[key] = entries.get(key, 0j) + value * q
    return ReducedElementTable(reduced.twice_J, reduced.alpha_count, entries, reduced.group)

def _unsupported_sectors(space:SpaceSpec, evals:np.ndarray, evecs:np.ndarray, cutoff:float) -> list:
    null = evecs[:, evals <= cutoff]
    sectors = []
    for sector in space.sectors:
        idx = space.sector_indices(sector)
        if null.size and np.linalg.norm(null[idx, :]) > 1e-8:
            sectors.append(sector)
    return sectors

def normalize_families(families:list, tol:float=DEFAULT_TOLERANCES.channel) -> list:
    ''' Normalizes several families jointly by the pooled P = sum over all K^dag K

        The pooled Kraus set of the returned families is complete; each family
        on its own generally is not.
    '''
    space = families[0].space
    for family in families:
        _check_same_space(space, family.space, 'Normalize')
    gram = sum(family.gram() for family in families)
    _check_invariant(space, gram, tol)
    evals, evecs = eigh(gram)
    cutoff = tol * max(1.0, float(evals[-1]))
    if evals[0] <= cutoff:
        sectors = _unsupported_sectors(space, evals, evecs, cutoff)
        raise SingularFamilyError(f'Normalize Error: P is singular on sectors {sectors}', sectors)
    inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.conj().T
    logger.debug('normalized %d famil(ies), min eigenvalue of P %.3e', len(families), evals[0])
    return [expand_kraus(space, _transform_table(space, family.reduced, inv_sqrt)) for family in families]

def normalize_family(family:CovariantKrausFamily, tol:float=DEFAULT_TOLERANCES.channel) -> CovariantKrausFamily:
    ''' Makes a family trace preserving by K -> K P^{-1/2}

        P = sum K^dag K commutes with the representation, so the normalized
        family stays covariant; the reduced table is updated to match.

        :param family: CovariantKrausFamily - raw family with full support
        :param tol: float - commutation tolerance and relative singularity cutoff
        :return: CovariantKrausFamily
    '''
    return normalize_families([family], tol)[0]


def apply_kraus(kraus:list, matrix:np.ndarray) -> np.ndarray:
    '''sum K rho K^dag on raw matrices'''
    return sum(k @ matrix @ k.conj().T for k in kraus)

def apply_channel(channel:CovariantChannel, rho:DensityMatrix) -> DensityMatrix:
    '''sum over components and Kraus operators of w K rho K^dag'''
    _check_same_space(channel.space, rho.space, 'Channel')
    return DensityMatrix(rho.space, apply_kraus(channel.kraus_operators(), rho.matrix))

def branch_output(branch:CovariantChannel, rho:DensityMatrix):
    ''' Outcome of one branch of a non-deterministic map

        :return: (probability, DensityMatrix or None when the branch never fires)
    '''
    _check_same_space(branch.space, rho.space, 'Channel')
    out = apply_kraus(branch.kraus_operators(), rho.matrix)
    prob = float(np.trace(out).real)
    if prob <= DEFAULT_TOLERANCES.construction:
        return 0.0, None
    return prob, DensityMatrix(rho.space, out / prob)


def twirl(rho:DensityMatrix) -> DensityMatrix:
    ''' Group average of rho, by exact block projection

        Each j-block over its equivalent sectors is ordered multiplicity (x) irrep;
        it becomes (partial trace over the irrep factor) (x) I/(2j+1) and
        coherences between different j vanish.
    '''
    space = rho.space
    out = np.zeros_like(rho.matrix)
    for irrep in space.irreps():
        sectors = space.multiplicity_sectors(irrep)
        d, k = space.sector_dim(irrep), len(sectors)
        idx = [i for s in sectors for i in space.sector_indices(s)]
        block = rho.matrix[np.ix_(idx, idx)].reshape(k, d, k, d)
        reduced = np.einsum('aibi->ab', block)
        out[np.ix_(idx, idx)] = np.kron(reduced, np.eye(d) / d)
    return DensityMatrix(space, out)


def covariance_residual(channel:CovariantChannel, g:GroupElement) -> float:
    ''' max over matrix units E_ab of || E(U E_ab U^dag) - U E(E_ab) U^dag ||

        With A_k = K_k U and B_k = U K_k the residual on E_ab is P_a S P_b^dag,
        where P_a stacks the columns A_k[:, a] and B_k[:, a] and S = diag(I, -I).
        A QR factorization P_a = Q_a R_a reduces each norm to that of the small
        matrix R_a S R_b^dag, so memory stays O(dim^2).

        Parameters
        ----------
            :param channel: CovariantChannel - channel under test (strict or not)
            :param g: GroupElement - group element
            :return: float
    '''
    u = representation_matrix(channel.space, g)
    kraus = channel.kraus_operators()
    stacked = np.stack([k @ u for k in kraus] + [u @ k for k in kraus])
    sign = np.concatenate([np.ones(len(kraus)), -np.ones(len(kraus))])
    # factors[a] is P_a: rows of the output space, one column per operator
    factors = stacked.transpose(2, 1, 0)
    _, r = np.linalg.qr(factors)
    worst = 0.0
    for r_a in r:
        small = np.einsum('ik,k,bjk->bij', r_a, sign, r.conj())
        worst = max(worst, float(np.max(np.linalg.norm(small, ord=2, axis=(1, 2)))))
    return worst


def tensor_operator_residual(family:CovariantKrausFamily, g:GroupElement) -> float:
    ''' max over (M, alpha) of || U K_{J,M} U^dag - sum_{M'} D^J_{M',M}(g) K_{J,M'} ||

        For U1 the right-hand side is exp(i N theta) K.
    '''
    u = representation_matrix(family.space, g)
    if family.space.group is GroupKind.U1:
        phase = np.exp(1j * family.twice_J * g.theta)
        return max(float(np.linalg.norm(u @ k.matrix @ u.conj().T - phase * k.matrix, 2)) for k in family.kraus)
    rank_space = SpaceSpec(GroupKind.SU2, ((family.twice_J, 0),))
    d = representation_matrix(rank_space, g)
    shifts = sector_weights(GroupKind.SU2, family.twice_J)
    by_key = {(k.twice_M, k.alpha): k.matrix for k in family.kraus}
    worst = 0.0
    for col, twice_M in enumerate(shifts):
        for alpha in range(family.reduced.alpha_count):
            rotated = u @ by_key[(twice_M, alpha)] @ u.conj().T
            expected = sum(d[row, col] * by_key[(mp, alpha)] for row, mp in enumerate(shifts))
            worst = max(worst, float(np.linalg.norm(rotated - expected, 2)))
    return worst


def selection_pairs(space:SpaceSpec, twice_J:int) -> list:
    selection = ReducedElementTable(twice_J, 1, {}, space.group)
    return [(out, inp) for inp in space.sectors for out in space.sectors if selection.allows(out.irrep, inp.irrep)]

def invariant_family(space:SpaceSpec, blocks:dict) -> CovariantKrausFamily:
    ''' J=0 family with one Kraus operator acting as W_j on each multiplicity space

        :param blocks: dict - irrep -> k x k matrix over its equivalent sectors
    '''
    entries = {}
    for irrep, block in blocks.items():
        sectors = space.multiplicity_sectors(irrep)
        for a, out in enumerate(sectors):
            for b, inp in enumerate(sectors):
                if block[a, b] != 0:
                    entries[(0, out, inp)] = block[a, b]
    return expand_kraus(space, ReducedElementTable(0, 1, entries, space.group))

def random_covariant_channel(space:SpaceSpec, twice_J:int, alpha_count:int, seed:int,
                             tol:float=DEFAULT_TOLERANCES.channel) -> CovariantChannel:
    ''' Random covariant channel with complex-Gaussian reduced elements

        Input sectors the rank-J family cannot reach (or multiplicity directions
        it leaves unsupported) are completed by a J=0 projector family, so the
        pooled Kraus set is always complete.

        Parameters
        ----------
            :param space: SpaceSpec - system space
            :param twice_J: int - doubled rank (SU2) or charge shift (U1)
            :param alpha_count: int - number of independent tensor operators
            :param seed: int - seed of the generator
    '''
    pairs = selection_pairs(space, twice_J)
    if not pairs:
        raise DomainError(f'Channel Error: no sector pair of {space.describe()} satisfies the selection rule for twice_J={twice_J}')
    rng = np.random.default_rng(seed)
    entries = {}
    for alpha in range(alpha_count):
        for out, inp in pairs:
            entries[(alpha, out, inp)] = complex(rng.normal(), rng.normal()) / np.sqrt(2)
    raw = expand_kraus(space, ReducedElementTable(twice_J, alpha_count, entries, space.group))
    gram = raw.gram()
    _check_invariant(space, gram, tol)
    evals, evecs = eigh(gram)
    cutoff = tol * max(1.0, float(evals[-1]))
    support = evals > cutoff
    inv_sqrt = (evecs[:, support] / np.sqrt(evals[support])) @ evecs[:, support].conj().T
    family = expand_kraus(space, _transform_table(space, raw.reduced, inv_sqrt))
    components = [(1.0, family)]
    if not np.all(support):
        kernel = evecs[:, ~support] @ evecs[:, ~support].conj().T
        blocks = {}
        for irrep in space.irreps():
            sectors = space.multiplicity_sectors(irrep)
            top = sector_weights(space.group, irrep)[0]
            rows = [space.index(s, top) for s in sectors]
            blocks[irrep] = kernel[np.ix_(rows, rows)]
        components.append((1.0, invariant_family(space, blocks)))
        logger.debug('padded rank %d channel on %s with a J=0 family', twice_J, space.describe())
    return CovariantChannel(tuple(components), tol=tol)

def uniform_covariant_channel(space:SpaceSpec, twice_J:int, tol:float=DEFAULT_TOLERANCES.channel) -> CovariantChannel:
    ''' Rank-J channel with every allowed reduced element equal to 1, then normalized

        On {0, 1/2, 1} with twice_J=1 this is the channel E_{1/2} whose branch
        K_{1/2,-1/2} sends |1/2;1/2> to a multiple of |1;0> + |0;0>.
    '''
    pairs = selection_pairs(space, twice_J)
    if not pairs:
        raise DomainError(f'Channel Error: no sector pair of {space.describe()} satisfies the selection rule for twice_J={twice_J}')
    table = ReducedElementTable(twice_J, 1, {(0, out, inp): 1.0 for out, inp in pairs}, space.group)
    return CovariantChannel(((1.0, normalize_family(expand_kraus(space, table), tol)),), tol=tol)

def _multiplicity_unitaries(space:SpaceSpec, rng:np.random.Generator) -> dict:
    blocks = {}
    for irrep in space.irreps():
        k = len(space.multiplicity_sectors(irrep))
        if k > 1:
            blocks[irrep] = unitary_group.rvs(k, random_state=rng)
        else:
            blocks[irrep] = np.array([[np.exp(1j * rng.uniform(0, 2 * np.pi))]])
    return blocks

def random_covariant_unitary(space:SpaceSpec, seed:int) -> CovariantChannel:
    '''sum_j I_irrep (x) W_j with Haar W_j on each multiplicity space (a phase when it is one dimensional)'''
    rng = np.random.default_rng(seed)
    return CovariantChannel(((1.0, invariant_family(space, _multiplicity_unitaries(space, rng))),))

def symmetric_hamiltonian_unitary(space:SpaceSpec, seed:int, time:float=1.0) -> CovariantChannel:
    ''' exp(-i H t) for a random invariant Hamiltonian H = sum_j h_j (x) I_irrep

        :param space: SpaceSpec - system space
        :param seed: int - seed of the generator
        :param time: float - evolution time
        :return: CovariantChannel
    '''
    rng = np.random.default_rng(seed)
    blocks = {}
    for irrep in space.irreps():
        k = len(space.multiplicity_sectors(irrep))
        a = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        blocks[irrep] = expm(-1j * time * (a + a.conj().T) / 2)
    return CovariantChannel(((1.0, invariant_family(space, blocks)),))


def branch_channels(channel:CovariantChannel) -> list:
    ''' Irreducible branches E_{J,alpha} of a channel

        Branches are trace decreasing, so they come back with strict=False.
    '''
    branches = []
    for weight, family in channel.components:
        for alpha in range(family.reduced.alpha_count):
            sub = expand_kraus(family.space, family.reduced.restricted_to(alpha))
            branches.append(CovariantChannel(((weight, sub),), strict=False))
    return branches
