import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .channels import (CovariantChannel, CovariantKrausFamily, DensityMatrix, apply_kraus,
                       complex_to_pair, twirl)
from .config import DEFAULT_TOLERANCES
from .errors import DomainError, RegisterError
from .repkit import (GroupElement, GroupKind, SpaceSpec, cg_coefficient, finite_set,
                     is_valid_weight, representation_matrix, sector_weights)

__all__ = ['WeightRegister', 'BipartiteState', 'IsometryKind', 'IsometrySpec', 'ProjectorSet',
           'CoherenceReport', 'l_factor_bases', 'isometry_C', 'isometry_Cg', 'isometry_L',
           'embed_C', 'embed_Cg', 'embed_L', 'projector_set', 'locc_simulated_kraus',
           'locc_channel_kraus', 'locc_simulation_residual', 'coherence_criterion',
           'twirl_distance', 'invariance_via_finite_set', 'l_side_kraus', 'l_channel_kraus',
           'l_reproduction_residual', 'pinch_sigma_bar', 'pinch_rho_bar',
           'pinched_product_decomposition']

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightRegister:
    ''' Register H_B spanned by weight kets |m>

        Weights are in the same units as the source space (twice_m for SU2,
        charges for U1) and run from twice_m_min to twice_m_max in `step`.
        Step 2 covers a single SU2 parity; step 1 is used for U1 and for SU2
        spaces mixing integer and half-integer spins.
    '''
    twice_m_min: int
    twice_m_max: int
    step: int = 2

    def __post_init__(self):
        if self.step not in (1, 2):
            raise RegisterError(f'Register Error: step must be 1 or 2, not {self.step}')
        if self.twice_m_max < self.twice_m_min or (self.twice_m_max - self.twice_m_min) % self.step:
            raise RegisterError(f'Register Error: invalid range {self.twice_m_min}..{self.twice_m_max} step {self.step}')

    @classmethod
    def for_space(cls, space:SpaceSpec, padding:int=0):
        '''smallest register holding every weight of the space, widened by padding on both ends'''
        weights = space.weights()
        if space.group is GroupKind.U1 or len({w % 2 for w in weights}) > 1:
            step = 1
        else:
            step = 2
        if step == 2 and padding % 2:
            padding += 1
        return cls(min(weights) - padding, max(weights) + padding, step)

    @property
    def dim(self) -> int:
        return (self.twice_m_max - self.twice_m_min) // self.step + 1

    def weights(self) -> list:
        '''register weights, descending'''
        return list(range(self.twice_m_max, self.twice_m_min - 1, -self.step))

    def contains(self, weight:int) -> bool:
        return self.twice_m_min <= weight <= self.twice_m_max and (weight - self.twice_m_min) % self.step == 0

    def index(self, weight:int) -> int:
        if not self.contains(weight):
            raise RegisterError(f'Register Error: weight {weight} is not in {self.twice_m_min}..{self.twice_m_max}')
        return (self.twice_m_max - weight) // self.step

    def require(self, space:SpaceSpec, shifts=(0,)):
        '''raises RegisterError unless every source weight shifted by every shift is in the register'''
        for w in space.weights():
            for shift in shifts:
                if not self.contains(w + shift):
                    raise RegisterError(f'Register Error: weight {w}{shift:+d} of {space.describe()} falls outside '
                                        f'{self.twice_m_min}..{self.twice_m_max}; pad the register by at least {abs(shift)}')

    def shift_operator(self, shift:int) -> np.ndarray:
        '''T_M = sum_w |w+M><w| restricted to the register (a partial isometry)'''
        t = np.zeros((self.dim, self.dim), dtype=complex)
        for w in self.weights():
            if self.contains(w + shift):
                t[self.index(w + shift), self.index(w)] = 1
        return t


@dataclass(frozen=True, eq=False)
class BipartiteState:
    ''' State on H_A (x) H_B with a declared cut

        Parameters
        ----------
            :param matrix: np.ndarray - (d_A d_B) x (d_A d_B) density matrix
            :param cut: tuple - (d_A, d_B)
            :param labels: tuple - description of each factor's basis
            :param raw_trace: float - trace before renormalization (1 for exact images)
    '''
    matrix: np.ndarray
    cut: tuple
    labels: tuple = ('A', 'B')
    raw_trace: float = 1.0
    tol: float = field(default=DEFAULT_TOLERANCES.negative, repr=False)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        d_a, d_b = (int(d) for d in self.cut)
        if matrix.shape != (d_a * d_b, d_a * d_b):
            raise DomainError(f'Bipartite Error: matrix shape {matrix.shape} does not match cut {(d_a, d_b)}')
        if np.max(np.abs(matrix - matrix.conj().T)) > DEFAULT_TOLERANCES.construction:
            raise DomainError('Bipartite Error: matrix is not Hermitian')
        matrix = (matrix + matrix.conj().T) / 2
        trace = np.trace(matrix).real
        if abs(trace - 1) > self.tol:
            raise DomainError(f'Bipartite Error: trace is {trace!r}, expected 1')
        if np.linalg.eigvalsh(matrix)[0] < -self.tol:
            raise DomainError('Bipartite Error: matrix has a negative eigenvalue')
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'cut', (d_a, d_b))

    @classmethod
    def from_unnormalized(cls, matrix:np.ndarray, cut:tuple, labels:tuple=('A', 'B')):
        '''renormalizes and keeps the raw trace'''
        raw = float(np.trace(matrix).real)
        if raw <= 0:
            raise DomainError(f'Bipartite Error: cannot renormalize a state with trace {raw!r}')
        if abs(raw - 1) > DEFAULT_TOLERANCES.channel:
            logger.info('renormalized a %s state with raw trace %r', 'x'.join(map(str, cut)), raw)
        return cls(matrix / raw, cut, labels, raw)

    @classmethod
    def product(cls, rho_a:np.ndarray, rho_b:np.ndarray, labels:tuple=('A', 'B')):
        return cls(np.kron(rho_a, rho_b), (rho_a.shape[0], rho_b.shape[0]), labels)

    def reduced(self, keep:str) -> np.ndarray:
        '''partial trace; keep is 'A' or 'B' '''
        d_a, d_b = self.cut
        tensor = self.matrix.reshape(d_a, d_b, d_a, d_b)
        if keep == 'A':
            return np.einsum('ikjk->ij', tensor)
        if keep == 'B':
            return np.einsum('kikj->ij', tensor)
        raise DomainError(f"Bipartite Error: keep must be 'A' or 'B', not {keep!r}")

    def to_dict(self) -> dict:
        return {'cut': list(self.cut), 'labels': list(self.labels), 'raw_trace': self.raw_trace,
                'matrix': [[complex_to_pair(z) for z in row] for row in self.matrix]}


class IsometryKind(Enum):
    C = 'C'
    Cg = 'Cg'
    L = 'L'


@dataclass(frozen=True, eq=False)
class IsometrySpec:
    ''' Column isometry V from the source space into H_A (x) H_B

        For kind C and Cg the cut is (source dim, register dim); for kind L it
        is (dim of sum_j M_j, number of sectors).
    '''
    kind: IsometryKind
    source: SpaceSpec
    matrix: np.ndarray
    cut: tuple
    g: GroupElement = None
    register: WeightRegister = None
    labels: tuple = ('A', 'B')

    def __post_init__(self):
        residual = np.linalg.norm(self.matrix.conj().T @ self.matrix - np.eye(self.source.dim), 2)
        if residual > DEFAULT_TOLERANCES.construction:
            raise DomainError(f'Isometry Error: V^dag V deviates from identity by {residual:.3e}')

    def apply(self, rho:DensityMatrix) -> BipartiteState:
        '''V rho V^dag on the declared cut'''
        if rho.space != self.source:
            raise DomainError('Isometry Error: state does not live on the source space of the isometry')
        return BipartiteState(self.matrix @ rho.matrix @ self.matrix.conj().T, self.cut, self.labels)

    def image_projector(self) -> np.ndarray:
        return self.matrix @ self.matrix.conj().T


# helper functions
def l_factor_bases(space:SpaceSpec):
    ''' Bases of the two L factors

        :return: (m_basis, n_basis); m_basis lists (irrep, weight) over the
                 distinct irreps, n_basis lists the sectors
    '''
    m_basis = [(irrep, w) for irrep in space.irreps() for w in sector_weights(space.group, irrep)]
    return m_basis, list(space.sectors)

def _c_matrix(space:SpaceSpec, register:WeightRegister) -> np.ndarray:
    v = np.zeros((space.dim * register.dim, space.dim), dtype=complex)
    for i, label in enumerate(space.basis):
        v[i * register.dim + register.index(label.weight), i] = 1
    return v


def isometry_C(space:SpaceSpec, register:WeightRegister=None) -> IsometrySpec:
    '''|j,lambda;m> -> |j,lambda;m> (x) |m>'''
    register = WeightRegister.for_space(space) if register is None else register
    register.require(space)
    return IsometrySpec(IsometryKind.C, space, _c_matrix(space, register), (space.dim, register.dim),
                        register=register, labels=('system', 'weight register'))

def isometry_Cg(space:SpaceSpec, g:GroupElement, register:WeightRegister=None) -> IsometrySpec:
    ''' C_g = (U(g) (x) I) C U(g)^dag

        The multiplicity label is kept fixed, so C_g at the identity is C.
    '''
    register = WeightRegister.for_space(space) if register is None else register
    register.require(space)
    u = representation_matrix(space, g)
    v = np.kron(u, np.eye(register.dim)) @ _c_matrix(space, register) @ u.conj().T
    return IsometrySpec(IsometryKind.Cg, space, v, (space.dim, register.dim), g=g,
                        register=register, labels=('system', 'weight register'))

def isometry_L(space:SpaceSpec) -> IsometrySpec:
    '''|j,lambda;m> -> |j,m> (x) |j,lambda> into M (x) N'''
    m_basis, n_basis = l_factor_bases(space)
    m_index = {label: i for i, label in enumerate(m_basis)}
    n_index = {sector: i for i, sector in enumerate(n_basis)}
    v = np.zeros((len(m_basis) * len(n_basis), space.dim), dtype=complex)
    for i, label in enumerate(space.basis):
        v[m_index[(label.sector.irrep, label.weight)] * len(n_basis) + n_index[label.sector], i] = 1
    return IsometrySpec(IsometryKind.L, space, v, (len(m_basis), len(n_basis)), labels=('M', 'N'))


def embed_C(rho:DensityMatrix, register:WeightRegister=None) -> BipartiteState:
    return isometry_C(rho.space, register).apply(rho)

def embed_Cg(g:GroupElement, rho:DensityMatrix, register:WeightRegister=None) -> BipartiteState:
    return isometry_Cg(rho.space, g, register).apply(rho)

def embed_L(rho:DensityMatrix) -> BipartiteState:
    return isometry_L(rho.space).apply(rho)


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    ''' Weight projectors on the source and irrep projectors on the L image

        pi_m maps weight -> Pi_m (source), pi_j maps irrep -> Pi_{M_j} (x) Pi_{N_j}
        on M (x) N, and pi_W projects onto the image of L.
    '''
    pi_m: dict
    pi_j: dict
    pi_W: np.ndarray

def projector_set(space:SpaceSpec) -> ProjectorSet:
    m_basis, n_basis = l_factor_bases(space)
    pi_m = {w: space.weight_projector(w) for w in space.weights()}
    pi_j = {}
    for irrep in space.irreps():
        pm = np.diag([1.0 if label[0] == irrep else 0.0 for label in m_basis])
        pn = np.diag([1.0 if sector.irrep == irrep else 0.0 for sector in n_basis])
        pi_j[irrep] = np.kron(pm, pn).astype(complex)
    return ProjectorSet(pi_m, pi_j, isometry_L(space).image_projector())


def _family_shifts(family:CovariantKrausFamily) -> list:
    return sorted({k.twice_M for k in family.kraus})

def locc_simulated_kraus(family:CovariantKrausFamily, register:WeightRegister=None,
                         g:GroupElement=None) -> list:
    ''' Local Kraus operators K_{J,M,alpha} (x) T_M simulating the family on C images

        With g given, the system factor is U(g) K U(g)^dag, which simulates the
        family on C_g images.

        Parameters
        ----------
            :param family: CovariantKrausFamily - family to simulate
            :param register: WeightRegister - register padded by the largest |M|
            :param g: GroupElement - optional element selecting C_g
            :return: list of np.ndarray
    '''
    space = family.space
    shifts = _family_shifts(family)
    register = WeightRegister.for_space(space, family.max_shift()) if register is None else register
    register.require(space, shifts)
    u = representation_matrix(space, g) if g is not None else np.eye(space.dim)
    return [np.kron(u @ k.matrix @ u.conj().T, register.shift_operator(k.twice_M)) for k in family.kraus]

def locc_channel_kraus(channel:CovariantChannel, register:WeightRegister=None, g:GroupElement=None) -> list:
    '''pooled local Kraus set of a channel, weights folded in'''
    register = WeightRegister.for_space(channel.space, channel.max_shift()) if register is None else register
    return [np.sqrt(w) * k for w, fam in channel.components for k in locc_simulated_kraus(fam, register, g)]

def locc_simulation_residual(channel:CovariantChannel, g:GroupElement=None,
                             register:WeightRegister=None) -> float:
    ''' max over source matrix units E_ab of || V E(E_ab) V^dag - sum K~ (V E_ab V^dag) K~^dag ||

        V is C (g None) or C_g; zero certifies the channel identity on the image.
    '''
    space = channel.space
    register = WeightRegister.for_space(space, channel.max_shift()) if register is None else register
    g = GroupElement.identity(space.group) if g is None else g
    v = isometry_Cg(space, g, register).matrix
    local = locc_channel_kraus(channel, register, g)
    kraus = channel.kraus_operators()
    worst = 0.0
    for a in range(space.dim):
        for b in range(space.dim):
            unit = np.zeros((space.dim, space.dim), dtype=complex)
            unit[a, b] = 1
            lhs = v @ apply_kraus(kraus, unit) @ v.conj().T
            rhs = apply_kraus(local, v @ unit @ v.conj().T)
            worst = max(worst, float(np.linalg.norm(lhs - rhs, 2)))
    return worst


class CoherenceReport(NamedTuple):
    invariant_weights: bool
    max_commutator_norm: float

def coherence_criterion(rho:DensityMatrix, tol:float=DEFAULT_TOLERANCES.channel) -> CoherenceReport:
    ''' max_m ||[rho, Pi_m]||; the C image of rho is entangled iff this exceeds tol '''
    worst = 0.0
    for w in rho.space.weights():
        proj = rho.space.weight_projector(w)
        worst = max(worst, float(np.linalg.norm(rho.matrix @ proj - proj @ rho.matrix, 2)))
    return CoherenceReport(worst <= tol, worst)

def twirl_distance(rho:DensityMatrix) -> float:
    '''||rho - twirl(rho)||, the invariance oracle'''
    return rho.distance(twirl(rho))

def invariance_via_finite_set(rho:DensityMatrix, tol:float=DEFAULT_TOLERANCES.channel) -> bool:
    ''' rho is invariant iff it has no weight coherence in every frame U(s)^dag rho U(s), s in S

        For SU2, S is the identity and the y rotation by pi/2 (J_z -> J_x); for
        U1 the identity alone.
    '''
    for s in finite_set(rho.space):
        rotated = rho if s.is_identity() else rho.conjugate_by(representation_matrix(rho.space, s).conj().T)
        if not coherence_criterion(rotated, tol).invariant_weights:
            return False
    return True


def _l_shift(space:SpaceSpec, twice_J:int, twice_M:int, m_basis:list) -> np.ndarray:
    '''V~_{J,M} on the M factor: CG (SU2) or the charge shift (U1)'''
    v = np.zeros((len(m_basis), len(m_basis)), dtype=complex)
    for col, (j1, m1) in enumerate(m_basis):
        for row, (j2, m2) in enumerate(m_basis):
            if space.group is GroupKind.U1:
                v[row, col] = 1.0 if j2 == j1 + twice_M else 0.0
            elif m2 == m1 + twice_M and is_valid_weight(j2, m2):
                v[row, col] = cg_coefficient(j1, m1, twice_J, twice_M, j2, m2)
    return v

def l_side_kraus(family:CovariantKrausFamily) -> list:
    ''' Composite Kraus operators V~_{J,M} (x) K~_{J,alpha} on M (x) N

        V~ carries the CG coefficients between distinct irreps, K~ the reduced
        elements between sectors. Followed by Pi_W they reproduce L K L^dag.

        :return: list of (twice_M, alpha, np.ndarray)
    '''
    space = family.space
    m_basis, n_basis = l_factor_bases(space)
    n_index = {sector: i for i, sector in enumerate(n_basis)}
    reduced = family.reduced
    k_tilde = []
    for alpha in range(reduced.alpha_count):
        k = np.zeros((len(n_basis), len(n_basis)), dtype=complex)
        for (a, out, inp), value in reduced.entries.items():
            if a == alpha:
                k[n_index[out], n_index[inp]] = value
        k_tilde.append(k)
    return [(kr.twice_M, kr.alpha, np.kron(_l_shift(space, reduced.twice_J, kr.twice_M, m_basis), k_tilde[kr.alpha]))
            for kr in family.kraus]

def l_channel_kraus(channel:CovariantChannel) -> list:
    '''pooled composite Kraus set of a channel, weights folded in'''
    return [np.sqrt(w) * k for w, fam in channel.components for _, _, k in l_side_kraus(fam)]

def l_reproduction_residual(channel:CovariantChannel, rho:DensityMatrix) -> float:
    '''|| L(E(rho)) - sum Pi_W K~ L(rho) K~^dag Pi_W ||'''
    iso = isometry_L(rho.space)
    pi_w = iso.image_projector()
    image = iso.matrix @ rho.matrix @ iso.matrix.conj().T
    lhs = iso.matrix @ apply_kraus(channel.kraus_operators(), rho.matrix) @ iso.matrix.conj().T
    rhs = sum(pi_w @ k @ image @ k.conj().T @ pi_w for k in l_channel_kraus(channel))
    return float(np.linalg.norm(lhs - rhs, 2))


def _pinch(matrix:np.ndarray, projectors:dict) -> np.ndarray:
    return sum(p @ matrix @ p for p in projectors.values())

def pinch_sigma_bar(channel:CovariantChannel, rho:DensityMatrix) -> BipartiteState:
    ''' sigma_bar = sum_j Pi_j E~[L(rho)] Pi_j

        The composite branches are applied to L(rho), projected onto W and
        pinched by the irrep projectors. The raw trace of the unprojected
        output is kept on the returned state.
    '''
    iso = isometry_L(rho.space)
    projectors = projector_set(rho.space)
    image = iso.matrix @ rho.matrix @ iso.matrix.conj().T
    raw = apply_kraus(l_channel_kraus(channel), image)
    pinched = _pinch(projectors.pi_W @ raw @ projectors.pi_W, projectors.pi_j)
    state = BipartiteState.from_unnormalized(pinched, iso.cut, iso.labels)
    raw_trace = float(np.trace(raw).real)
    logger.debug('sigma_bar: raw trace %r, pinched trace %r', raw_trace, state.raw_trace)
    return BipartiteState(state.matrix, state.cut, state.labels, raw_trace)

def pinch_rho_bar(rho:DensityMatrix) -> BipartiteState:
    '''rho_bar = sum_j Pi_j L(rho) Pi_j'''
    iso = isometry_L(rho.space)
    image = iso.matrix @ rho.matrix @ iso.matrix.conj().T
    return BipartiteState(_pinch(image, projector_set(rho.space).pi_j), iso.cut, iso.labels)


def pinched_product_decomposition(state:BipartiteState, space:SpaceSpec, tol:float=DEFAULT_TOLERANCES.channel):
    ''' Explicit separable decomposition of a j-pinched L-image state

        Each block Pi_j state Pi_j lives on M_j (x) N_j; when either factor is
        one dimensional it is a product of its two marginals.

        :return: list of (weight, rho_M, rho_N) summing to the state, or None
                 when a populated block has both factors larger than one
    '''
    m_basis, n_basis = l_factor_bases(space)
    d_m, d_n = len(m_basis), len(n_basis)
    if state.cut != (d_m, d_n):
        raise DomainError(f'Decomposition Error: cut {state.cut} is not the L cut {(d_m, d_n)} of {space.describe()}')
    terms = []
    for irrep in space.irreps():
        m_idx = [i for i, label in enumerate(m_basis) if label[0] == irrep]
        n_idx = [i for i, sector in enumerate(n_basis) if sector.irrep == irrep]
        rows = [a * d_n + b for a in m_idx for b in n_idx]
        block = state.matrix[np.ix_(rows, rows)]
        weight = float(np.trace(block).real)
        if weight <= tol:
            continue
        if len(m_idx) > 1 and len(n_idx) > 1:
            return None
        tensor = block.reshape(len(m_idx), len(n_idx), len(m_idx), len(n_idx)) / weight
        rho_m = np.zeros((d_m, d_m), dtype=complex)
        rho_n = np.zeros((d_n, d_n), dtype=complex)
        rho_m[np.ix_(m_idx, m_idx)] = np.einsum('ikjk->ij', tensor)
        rho_n[np.ix_(n_idx, n_idx)] = np.einsum('kikj->ij', tensor)
        terms.append((weight, rho_m, rho_n))
    return terms
