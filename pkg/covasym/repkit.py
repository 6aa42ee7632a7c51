import json
import logging
from cmath import exp as cexp, phase
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt, cos, sin, acos, atan2, pi
from typing import NamedTuple

import numpy as np

from .errors import DomainError

__all__ = ['GroupKind', 'SectorKey', 'BasisLabel', 'SpaceSpec', 'GroupElement',
           'MAX_TWICE_J', 'MAX_DIM', 'sector_weights', 'is_valid_weight', 'triangle',
           'cg_coefficient', 'cg_matrix', 'wigner_small_d', 'wigner_small_d_matrix',
           'fundamental_matrix', 'compose', 'representation_matrix', 'generators',
           'finite_set', 'rotation_to_x']

logger = logging.getLogger(__name__)

# desk-scale bounds
MAX_TWICE_J = 16
MAX_DIM = 256


class GroupKind(Enum):
    SU2 = 'SU2'
    U1 = 'U1'


class SectorKey(NamedTuple):
    ''' One irrep-carrying sector H_{j,lambda}

        irrep is twice_j for SU2 (so half-integer spins stay exact) and the
        signed charge n for U1. lam is the multiplicity index.
    '''
    irrep: int
    lam: int


class BasisLabel(NamedTuple):
    '''flat basis vector |j,lambda;m>: weight is twice_m (SU2) or the charge (U1)'''
    sector: SectorKey
    weight: int


# helper functions
def sector_weights(group:GroupKind, irrep:int) -> tuple:
    '''weights of an irrep in descending order (twice_m for SU2, charge for U1)'''
    if group is GroupKind.SU2:
        return tuple(range(irrep, -irrep - 1, -2))
    return (irrep,)

def is_valid_weight(twice_j:int, twice_m:int) -> bool:
    '''True if twice_m is one of -twice_j, -twice_j + 2, ..., twice_j'''
    return twice_j >= 0 and abs(twice_m) <= twice_j and (twice_j - twice_m) % 2 == 0

def triangle(twice_j1:int, twice_j2:int, twice_j3:int) -> bool:
    '''True if j3 can occur in the coupling of j1 and j2'''
    return (abs(twice_j1 - twice_j2) <= twice_j3 <= twice_j1 + twice_j2
            and (twice_j1 + twice_j2 + twice_j3) % 2 == 0)


@dataclass(frozen=True)
class SpaceSpec:
    ''' Decomposition H = sum over (j, lambda) of H_{j,lambda}

        The flat basis lists sectors in the given order and, within each
        sector, weights in descending order. The index map is a bijection
        between BasisLabel and 0..dim-1.
    '''
    group: GroupKind
    sectors: tuple
    _basis: tuple = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)
    _offsets: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        group = GroupKind(self.group)
        sectors = tuple(SectorKey(int(irrep), int(lam)) for irrep, lam in self.sectors)
        if len(sectors) == 0:
            raise DomainError('Space Error: a space needs at least one sector')
        if len(set(sectors)) != len(sectors):
            raise DomainError(f'Space Error: duplicate (irrep, lambda) pairs in {sectors}')
        for sector in sectors:
            if sector.lam < 0:
                raise DomainError(f'Space Error: multiplicity index must be >= 0, not {sector.lam}')
            if group is GroupKind.SU2 and not 0 <= sector.irrep <= MAX_TWICE_J:
                raise DomainError(f'Space Error: twice_j must lie in 0..{MAX_TWICE_J}, not {sector.irrep}')
        basis, offsets = [], {}
        for sector in sectors:
            offsets[sector] = len(basis)
            basis.extend(BasisLabel(sector, w) for w in sector_weights(group, sector.irrep))
        if len(basis) > MAX_DIM:
            raise DomainError(f'Space Error: total dimension {len(basis)} exceeds {MAX_DIM}')
        object.__setattr__(self, 'group', group)
        object.__setattr__(self, 'sectors', sectors)
        object.__setattr__(self, '_basis', tuple(basis))
        object.__setattr__(self, '_index', {label: i for i, label in enumerate(basis)})
        object.__setattr__(self, '_offsets', offsets)

    @classmethod
    def from_irreps(cls, group, irreps):
        '''builds a space from a list of irrep labels, numbering repeated irreps lambda = 0, 1, ...'''
        counts, sectors = {}, []
        for irrep in irreps:
            sectors.append((irrep, counts.get(irrep, 0)))
            counts[irrep] = counts.get(irrep, 0) + 1
        return cls(GroupKind(group), tuple(sectors))

    @property
    def dim(self) -> int:
        return len(self._basis)

    @property
    def basis(self) -> tuple:
        return self._basis

    def index(self, sector:SectorKey, weight:int) -> int:
        '''flat index of |sector; weight>'''
        try:
            return self._index[BasisLabel(SectorKey(*sector), weight)]
        except KeyError:
            raise DomainError(f'Space Error: ({sector}, weight={weight}) is not a basis vector of this space') from None

    def label(self, i:int) -> BasisLabel:
        return self._basis[i]

    def has_sector(self, sector) -> bool:
        return SectorKey(*sector) in self._offsets

    def sector_dim(self, irrep:int) -> int:
        return len(sector_weights(self.group, irrep))

    def sector_indices(self, sector) -> list:
        '''flat indices of one sector, weights descending'''
        sector = SectorKey(*sector)
        if sector not in self._offsets:
            raise DomainError(f'Space Error: sector {sector} is not part of this space')
        start = self._offsets[sector]
        return list(range(start, start + self.sector_dim(sector.irrep)))

    def irreps(self) -> list:
        '''distinct irrep labels in order of first appearance'''
        return list(dict.fromkeys(s.irrep for s in self.sectors))

    def multiplicity_sectors(self, irrep:int) -> list:
        '''sectors carrying the given irrep, in listed order'''
        return [s for s in self.sectors if s.irrep == irrep]

    def weights(self) -> list:
        '''distinct weights, descending'''
        return sorted({label.weight for label in self._basis}, reverse=True)

    def weight_projector(self, weight:int) -> np.ndarray:
        '''Pi_m: projector onto all basis vectors carrying the given weight'''
        diag = np.array([1.0 if label.weight == weight else 0.0 for label in self._basis])
        return np.diag(diag).astype(complex)

    def sector_projector(self, irrep:int) -> np.ndarray:
        '''projector onto H_j (every sector carrying the irrep)'''
        diag = np.array([1.0 if label.sector.irrep == irrep else 0.0 for label in self._basis])
        return np.diag(diag).astype(complex)

    def describe(self) -> str:
        '''short text label used in reports, e.g. SU2[1/2,1,1']'''
        parts = []
        for sector in self.sectors:
            if self.group is GroupKind.SU2:
                text = str(sector.irrep // 2) if sector.irrep % 2 == 0 else f'{sector.irrep}/2'
            else:
                text = str(sector.irrep)
            parts.append(text + "'" * sector.lam)
        return f"{self.group.value}[{','.join(parts)}]"

    def to_dict(self) -> dict:
        return {'group': self.group.value, 'sectors': [[s.irrep, s.lam] for s in self.sectors]}

    @classmethod
    def from_dict(cls, data:dict):
        return cls(GroupKind(data['group']), tuple((int(a), int(b)) for a, b in data['sectors']))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text:str):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GroupElement:
    ''' Element g of SU(2) (z-y-z Euler angles) or U(1) (angle theta)

        SU(2) angles are taken modulo 4 pi so half-integer representations
        stay single valued.
    '''
    group: GroupKind
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    theta: float = 0.0

    @classmethod
    def su2(cls, alpha:float, beta:float, gamma:float):
        return cls(GroupKind.SU2, float(alpha), float(beta), float(gamma))

    @classmethod
    def u1(cls, theta:float):
        return cls(GroupKind.U1, theta=float(theta))

    @classmethod
    def identity(cls, group):
        return cls(GroupKind(group))

    @classmethod
    def random(cls, group, rng:np.random.Generator):
        '''Haar-distributed element drawn from rng'''
        if GroupKind(group) is GroupKind.U1:
            return cls.u1(rng.uniform(0, 2 * pi))
        return cls.su2(rng.uniform(0, 2 * pi), acos(1 - 2 * rng.uniform()), rng.uniform(0, 4 * pi))

    def inverse(self):
        if self.group is GroupKind.U1:
            return GroupElement.u1(-self.theta)
        return GroupElement.su2(-self.gamma, -self.beta, -self.alpha)

    def is_identity(self) -> bool:
        return self.alpha == self.beta == self.gamma == self.theta == 0.0


def rotation_to_x() -> GroupElement:
    '''R_y(pi/2): conjugates J_z into J_x'''
    return GroupElement.su2(0.0, pi / 2, 0.0)

def finite_set(space:SpaceSpec) -> list:
    ''' Finite set S whose coherence tests certify G-invariance

        SU(2) needs the identity and one rotation taking J_z to J_x; for U(1)
        the identity alone suffices.
    '''
    if space.group is GroupKind.U1:
        return [GroupElement.identity(GroupKind.U1)]
    return [GroupElement.identity(GroupKind.SU2), rotation_to_x()]


@lru_cache(maxsize=None)
def _cg_exact(tj1:int, tm1:int, tj2:int, tm2:int, tj3:int, tm3:int) -> float:
    '''Racah closed form with exact integer factorials; arguments are doubled'''
    def f(twice:int) -> int:
        return factorial(twice // 2)
    prefactor = Fraction((tj3 + 1) * f(tj3 + tj1 - tj2) * f(tj3 - tj1 + tj2) * f(tj1 + tj2 - tj3),
                         f(tj1 + tj2 + tj3 + 2))
    prefactor *= (f(tj1 - tm1) * f(tj1 + tm1) * f(tj2 - tm2) * f(tj2 + tm2)
                  * f(tj3 + tm3) * f(tj3 - tm3))
    # k runs where every factorial argument below is non-negative
    a, b = (tj3 - tj2 + tm1) // 2, (tj3 - tj1 - tm2) // 2
    kmin = max(0, -a, -b)
    kmax = min((tj1 + tj2 - tj3) // 2, (tj1 - tm1) // 2, (tj2 + tm2) // 2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        total += Fraction(-1 if k % 2 else 1,
                          factorial(k) * f(tj1 + tj2 - tj3 - 2 * k) * f(tj1 - tm1 - 2 * k)
                          * f(tj2 + tm2 - 2 * k) * factorial(a + k) * factorial(b + k))
    return sqrt(prefactor) * float(total)

def cg_coefficient(twice_j1:int, twice_m1:int, twice_j2:int, twice_m2:int,
                   twice_j3:int, twice_m3:int) -> float:
    ''' Clebsch-Gordan coefficient <j1 m1; j2 m2 | j3 m3> (Condon-Shortley phase)

        All arguments are doubled integers. Returns exactly 0.0 when
        m1 + m2 != m3 or when j3 violates the triangle rule.

        Parameters
        ----------
            :param twice_j1, twice_m1: int - first irrep and weight
            :param twice_j2, twice_m2: int - second irrep and weight
            :param twice_j3, twice_m3: int - coupled irrep and weight
    '''
    for tj, tm in ((twice_j1, twice_m1), (twice_j2, twice_m2), (twice_j3, twice_m3)):
        if not is_valid_weight(tj, tm):
            raise DomainError(f'CG Error: twice_m={tm} is not a weight of twice_j={tj}')
    if twice_m1 + twice_m2 != twice_m3 or not triangle(twice_j1, twice_j2, twice_j3):
        return 0.0
    return _cg_exact(twice_j1, twice_m1, twice_j2, twice_m2, twice_j3, twice_m3)

def cg_matrix(twice_j1:int, twice_j2:int):
    ''' Change of basis from |j1 m1>|j2 m2> to the coupled basis |j3 m3>

        Returns (matrix, rows, cols). Columns are product states in the order
        (m1 descending, m2 descending); rows are coupled states ordered by j3
        descending, then m3 descending. The matrix is real orthogonal.
    '''
    cols = [(m1, m2) for m1 in sector_weights(GroupKind.SU2, twice_j1)
            for m2 in sector_weights(GroupKind.SU2, twice_j2)]
    rows = [(j3, m3) for j3 in range(twice_j1 + twice_j2, abs(twice_j1 - twice_j2) - 1, -2)
            for m3 in sector_weights(GroupKind.SU2, j3)]
    matrix = np.zeros((len(rows), len(cols)))
    for r, (j3, m3) in enumerate(rows):
        for c, (m1, m2) in enumerate(cols):
            matrix[r, c] = cg_coefficient(twice_j1, m1, twice_j2, m2, j3, m3)
    return matrix, rows, cols


def wigner_small_d(twice_j:int, twice_mp:int, twice_m:int, beta:float) -> float:
    '''d^j_{m',m}(beta) = <j m'| exp(-i beta J_y) |j m> via the factorial sum'''
    if not (is_valid_weight(twice_j, twice_mp) and is_valid_weight(twice_j, twice_m)):
        raise DomainError(f'Wigner Error: ({twice_mp}, {twice_m}) are not weights of twice_j={twice_j}')
    jpm, jmm = (twice_j + twice_m) // 2, (twice_j - twice_m) // 2
    jpmp, jmmp = (twice_j + twice_mp) // 2, (twice_j - twice_mp) // 2
    diff = (twice_mp - twice_m) // 2
    c, s = cos(beta / 2), sin(beta / 2)
    norm = sqrt(factorial(jpmp) * factorial(jmmp) * factorial(jpm) * factorial(jmm))
    total = 0.0
    for k in range(max(0, -diff), min(jpm, jmmp) + 1):
        sign = -1.0 if (diff + k) % 2 else 1.0
        denom = factorial(jpm - k) * factorial(k) * factorial(diff + k) * factorial(jmmp - k)
        total += sign / denom * c ** (twice_j - diff - 2 * k) * s ** (diff + 2 * k)
    return norm * total

def wigner_small_d_matrix(twice_j:int, beta:float) -> np.ndarray:
    '''d^j(beta) with rows m' and columns m, weights descending'''
    weights = sector_weights(GroupKind.SU2, twice_j)
    return np.array([[wigner_small_d(twice_j, mp, m, beta) for m in weights] for mp in weights])


def fundamental_matrix(g:GroupElement) -> np.ndarray:
    '''D^{1/2}(g), the 2x2 fundamental representation of an SU(2) element'''
    return _wigner_D(1, g)

def _wigner_D(twice_j:int, g:GroupElement) -> np.ndarray:
    weights = np.array(sector_weights(GroupKind.SU2, twice_j)) / 2
    left = np.exp(-1j * g.alpha * weights)
    right = np.exp(-1j * g.gamma * weights)
    return left[:, None] * wigner_small_d_matrix(twice_j, g.beta) * right[None, :]

def compose(g1:GroupElement, g2:GroupElement) -> GroupElement:
    ''' Group product g1 g2

        SU(2) products are formed in the fundamental representation and the
        Euler angles are read back off the resulting 2x2 matrix.
    '''
    if g1.group is not g2.group:
        raise DomainError('Group Error: cannot compose elements of different groups')
    if g1.group is GroupKind.U1:
        return GroupElement.u1(g1.theta + g2.theta)
    u = fundamental_matrix(g1) @ fundamental_matrix(g2)
    # u = [[e^{-i s/2} c, -e^{-i d/2} s], [e^{i d/2} s, e^{i s/2} c]] with s = a + g, d = a - g
    beta = 2 * atan2(abs(u[1, 0]), abs(u[0, 0]))
    if abs(u[0, 0]) < 1e-14:
        total, diff = 0.0, 2 * phase(u[1, 0])
    elif abs(u[1, 0]) < 1e-14:
        total, diff = -2 * phase(u[0, 0]), 0.0
    else:
        total, diff = -2 * phase(u[0, 0]), 2 * phase(u[1, 0])
    return GroupElement.su2((total + diff) / 2, beta, (total - diff) / 2)


def representation_matrix(space:SpaceSpec, g:GroupElement) -> np.ndarray:
    ''' U(g) on the flat basis: block diagonal over sectors

        SU(2) blocks are D^{(j)}(g) = exp(-i alpha J_z) d^j(beta) exp(-i gamma J_z),
        U(1) blocks are the phases exp(i n theta).
    '''
    if g.group is not space.group:
        raise DomainError(f'Group Error: element of {g.group.value} used on a {space.group.value} space')
    if space.group is GroupKind.U1:
        return np.diag([cexp(1j * label.weight * g.theta) for label in space.basis])
    matrix = np.zeros((space.dim, space.dim), dtype=complex)
    blocks = {}
    for sector in space.sectors:
        if sector.irrep not in blocks:
            blocks[sector.irrep] = _wigner_D(sector.irrep, g)
        idx = space.sector_indices(sector)
        matrix[np.ix_(idx, idx)] = blocks[sector.irrep]
    return matrix


def generators(space:SpaceSpec) -> dict:
    ''' Angular momentum operators on an SU(2) space

        Returns a dict with keys 'J_z', 'J_plus', 'J_minus', 'J_x', 'J_y'.
        U(1) spaces are rejected: their single generator is the charge
        operator from the abelian module.
    '''
    if space.group is not GroupKind.SU2:
        raise DomainError('Group Error: generators() needs an SU2 space; use abelian.charge_operator for U1')
    jz = np.diag([label.weight / 2 for label in space.basis]).astype(complex)
    jp = np.zeros((space.dim, space.dim), dtype=complex)
    for sector in space.sectors:
        tj = sector.irrep
        for tm in sector_weights(GroupKind.SU2, tj)[1:]:
            # <m+1| J_+ |m> = sqrt(j(j+1) - m(m+1))
            jp[space.index(sector, tm + 2), space.index(sector, tm)] = sqrt((tj * (tj + 2) - tm * (tm + 2)) / 4)
    jm = jp.conj().T
    return {'J_z': jz, 'J_plus': jp, 'J_minus': jm,
            'J_x': (jp + jm) / 2, 'J_y': (jp - jm) / 2j}
