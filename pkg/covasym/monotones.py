import logging
from dataclasses import dataclass, field
from math import inf, log
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh

from .channels import CovariantChannel, DensityMatrix, apply_channel, branch_channels, branch_output, twirl
from .config import DEFAULT_TOLERANCES
from .embed import BipartiteState, WeightRegister, embed_Cg, embed_L, isometry_Cg
from .errors import ChannelError, DomainError, NumericalAbort
from .repkit import GroupElement, GroupKind, SpaceSpec, finite_set, generators, rotation_to_x

__all__ = ['MonotoneValue', 'MonotoneRow', 'MonotoneReport', 'ReeBounds', 'MONOTONES',
           'partial_transpose', 'pt_trace_norm', 'negativity', 'log_negativity', 'evaluate_monotone',
           'asymmetry_monotone', 'asymmetry_sup', 'von_neumann_entropy', 'g_asymmetry',
           'relative_entropy', 'monotonicity_check', 'conservation_check', 'ensemble_average_check',
           'ree_bounds', 'random_standard_form_state', 'pure_state_trace_norm', 'generator_expectations']

logger = logging.getLogger(__name__)

LN2 = log(2)

_display_warned = False


def partial_transpose(state:BipartiteState) -> np.ndarray:
    '''transpose on the B factor'''
    d_a, d_b = state.cut
    if state.matrix.shape != (d_a * d_b, d_a * d_b):
        raise DomainError(f'Monotone Error: cut {state.cut} does not match matrix shape {state.matrix.shape}')
    return state.matrix.reshape(d_a, d_b, d_a, d_b).transpose(0, 3, 2, 1).reshape(d_a * d_b, d_a * d_b)

def pt_trace_norm(state:BipartiteState) -> float:
    '''||rho^Gamma||_1 from the eigenvalues of the Hermitian partial transpose'''
    return float(np.sum(np.abs(np.linalg.eigvalsh(partial_transpose(state)))))


class MonotoneValue(NamedTuple):
    name: str
    value: float
    cut: tuple
    clamped: bool = False


def _clamp(name:str, raw:float, tol:float=DEFAULT_TOLERANCES.negative):
    if raw >= 0:
        return raw, False
    if raw < -tol:
        logger.warning('%s came out at %.3e, clamped to 0', name, raw)
    return 0.0, True

def negativity(state:BipartiteState) -> float:
    '''(||rho^Gamma||_1 - 1) / 2, clamped at 0'''
    return _clamp('negativity', (pt_trace_norm(state) - 1) / 2)[0]

def log_negativity(state:BipartiteState) -> float:
    '''log2 ||rho^Gamma||_1, clamped at 0'''
    return _clamp('log_negativity', float(np.log2(pt_trace_norm(state))))[0]

MONOTONES = {'negativity': negativity, 'log_negativity': log_negativity}

def evaluate_monotone(name:str, state:BipartiteState) -> MonotoneValue:
    ''' Named entanglement monotone with the clamping flag

        :param name: str - key of MONOTONES
        :param state: BipartiteState - state to evaluate
        :return: MonotoneValue
    '''
    if name not in MONOTONES:
        raise DomainError(f"Monotone Error: unknown monotone '{name}', expected one of {sorted(MONOTONES)}")
    tn = pt_trace_norm(state)
    raw = (tn - 1) / 2 if name == 'negativity' else float(np.log2(tn))
    value, clamped = _clamp(name, raw)
    return MonotoneValue(name, value, state.cut, clamped)


def asymmetry_monotone(E:str, g:GroupElement, rho:DensityMatrix, register:WeightRegister=None) -> float:
    '''A^g_E(rho) = E(C_g(rho))'''
    return evaluate_monotone(E, embed_Cg(g, rho, register)).value

def asymmetry_sup(E:str, rho:DensityMatrix) -> float:
    '''max of A^s_E over the finite set S; faithful for negativity'''
    return max(asymmetry_monotone(E, s, rho) for s in finite_set(rho.space))


def _matrix_of(state) -> np.ndarray:
    return state.matrix if hasattr(state, 'matrix') else np.asarray(state, dtype=complex)

def _clipped_eigvals(matrix:np.ndarray, clip:float, what:str) -> np.ndarray:
    evals = np.linalg.eigvalsh(matrix)
    if evals[0] < -clip:
        diagnostics = {'what': what, 'min_eigenvalue': float(evals[0]), 'clip': clip,
                       'trace': float(np.trace(matrix).real), 'dim': int(matrix.shape[0])}
        logger.error('numerical abort in %s: %r', what, diagnostics)
        raise NumericalAbort(f'Entropy Error: eigenvalue {evals[0]:.3e} of {what} is below -{clip:g}', diagnostics)
    return np.clip(evals, 0, None)

def von_neumann_entropy(state, clip:float=DEFAULT_TOLERANCES.clip) -> float:
    ''' S(rho) in bits

        Eigenvalues in [-clip, 0) are float noise and count as zero; anything
        lower raises NumericalAbort with diagnostics.
    '''
    evals = _clipped_eigvals(_matrix_of(state), clip, 'entropy')
    evals = evals[evals > 0]
    return float(-np.sum(evals * np.log(evals)) / LN2)

def g_asymmetry(rho:DensityMatrix, clip:float=DEFAULT_TOLERANCES.clip) -> float:
    '''A_G(rho) = S(twirl(rho)) - S(rho), in bits'''
    return max(0.0, von_neumann_entropy(twirl(rho), clip) - von_neumann_entropy(rho, clip))

def relative_entropy(rho, sigma, support:float=DEFAULT_TOLERANCES.support,
                     clip:float=DEFAULT_TOLERANCES.clip) -> float:
    ''' S(rho || sigma) = -S(rho) - Tr(rho log sigma), in bits

        Returns float inf when the support of rho is not inside the support of
        sigma. Accepts DensityMatrix, BipartiteState or raw matrices.
    '''
    a, b = _matrix_of(rho), _matrix_of(sigma)
    if a.shape != b.shape:
        raise DomainError(f'Entropy Error: shapes {a.shape} and {b.shape} differ')
    _clipped_eigvals(b, clip, 'relative entropy (second argument)')
    evals, evecs = eigh(b)
    kept = evals > support
    leak = np.trace(a @ evecs[:, ~kept] @ evecs[:, ~kept].conj().T).real if np.any(~kept) else 0.0
    if leak > support:
        return inf
    log_sigma = (evecs[:, kept] * np.log(evals[kept])) @ evecs[:, kept].conj().T
    cross = float(np.trace(a @ log_sigma).real) / LN2
    return max(0.0, -von_neumann_entropy(a, clip) - cross)


class MonotoneRow(NamedTuple):
    monotone: str
    frame: str
    before: float
    after: float
    delta: float
    verdict: bool


@dataclass
class MonotoneReport:
    ''' Before/after values of each monotone in each frame

        `kind` is 'monotone' (pass iff after <= before + tol) or 'conserved'
        (pass iff |after - before| < tol).
    '''
    kind: str
    tol: float
    rows: list = field(default_factory=list)

    def add(self, monotone:str, frame:str, before:float, after:float):
        delta = after - before
        verdict = abs(delta) < self.tol if self.kind == 'conserved' else after <= before + self.tol
        self.rows.append(MonotoneRow(monotone, frame, before, after, delta, bool(verdict)))

    @property
    def passed(self) -> bool:
        return all(row.verdict for row in self.rows)

    def worst_delta(self) -> float:
        if self.kind == 'conserved':
            return max((abs(r.delta) for r in self.rows), default=0.0)
        return max((r.delta for r in self.rows), default=0.0)


# helper functions
def _frame_name(g:GroupElement) -> str:
    if g.is_identity():
        return 'C'
    if g == rotation_to_x():
        return 'C_Ry(pi/2)'
    if g.group is GroupKind.U1:
        return f'C_g(theta={g.theta:.6g})'
    return f'C_g({g.alpha:.6g},{g.beta:.6g},{g.gamma:.6g})'

def monotonicity_check(rho:DensityMatrix, channel:CovariantChannel,
                       tol:float=DEFAULT_TOLERANCES.monotone) -> MonotoneReport:
    ''' A^s_E before and after a covariant channel for every monotone and every s in S

        :param rho: DensityMatrix - input state
        :param channel: CovariantChannel - trace-preserving covariant channel
        :param tol: float - allowed increase
        :return: MonotoneReport
    '''
    if channel.truncating:
        raise ChannelError('Monotone Error: truncating families are excluded from monotonicity checks')
    sigma = apply_channel(channel, rho)
    report = MonotoneReport('monotone', tol)
    for s in finite_set(rho.space):
        for name in MONOTONES:
            report.add(name, _frame_name(s), asymmetry_monotone(name, s, rho), asymmetry_monotone(name, s, sigma))
    return report

def conservation_check(rho:DensityMatrix, unitary_channel:CovariantChannel,
                       tol:float=DEFAULT_TOLERANCES.channel) -> MonotoneReport:
    ''' A^s_E and E(L(.)) are unchanged by a covariant unitary

        Rejects channels that are not a single unitary J=0 Kraus operator.
    '''
    if not unitary_channel.is_unitary():
        raise ChannelError('Monotone Error: conservation_check needs a covariant unitary (single J=0 Kraus operator)')
    sigma = apply_channel(unitary_channel, rho)
    report = MonotoneReport('conserved', tol)
    for s in finite_set(rho.space):
        for name in MONOTONES:
            report.add(name, _frame_name(s), asymmetry_monotone(name, s, rho), asymmetry_monotone(name, s, sigma))
    for name in MONOTONES:
        report.add(name, 'L', evaluate_monotone(name, embed_L(rho)).value,
                   evaluate_monotone(name, embed_L(sigma)).value)
    return report

def ensemble_average_check(name:str, g:GroupElement, rho:DensityMatrix, channel:CovariantChannel,
                           tol:float=DEFAULT_TOLERANCES.monotone) -> MonotoneReport:
    ''' sum_x p_x A^g_E(sigma_x) <= A^g_E(rho) over the irreducible branches of the channel '''
    average = 0.0
    for branch in branch_channels(channel):
        prob, out = branch_output(branch, rho)
        if out is not None:
            average += prob * asymmetry_monotone(name, g, out)
    report = MonotoneReport('monotone', tol)
    report.add(name, 'ensemble ' + _frame_name(g), asymmetry_monotone(name, g, rho), average)
    return report


class ReeBounds(NamedTuple):
    lower: float
    upper: float
    g_asymmetry: float
    witness_values: tuple

def ree_bounds(rho:DensityMatrix, g:GroupElement=None, witnesses=()) -> ReeBounds:
    ''' Bracket the relative entropy of entanglement of C_g(rho)

        The lower estimate is the hashing bound max(S(B) - S(AB), S(A) - S(AB), 0);
        the upper estimate is the least S(C_g(rho) || w) over separable witnesses,
        which always include C_g(twirl(rho)).

        Parameters
        ----------
            :param rho: DensityMatrix - state
            :param g: GroupElement - frame, identity when None
            :param witnesses: iterable - extra separable BipartiteStates on the C_g cut
            :return: ReeBounds
    '''
    g = GroupElement.identity(rho.space.group) if g is None else g
    iso = isometry_Cg(rho.space, g)
    image = iso.apply(rho)
    s_ab = von_neumann_entropy(image)
    lower = max(von_neumann_entropy(image.reduced('B')) - s_ab,
                von_neumann_entropy(image.reduced('A')) - s_ab, 0.0)
    values = [relative_entropy(image, iso.apply(twirl(rho)))]
    values += [relative_entropy(image, w) for w in witnesses]
    return ReeBounds(lower, min(values), g_asymmetry(rho), tuple(values))


def random_standard_form_state(space:SpaceSpec, rng:np.random.Generator) -> DensityMatrix:
    ''' Pure state sum sqrt(p_m) |j_m, lambda_m; m> with one sector per weight

        With distinct weights the C-image trace norm is (sum sqrt p)^2.
    '''
    psi = np.zeros(space.dim, dtype=complex)
    weights = space.weights()
    probs = rng.dirichlet(np.ones(len(weights)))
    for w, p in zip(weights, probs):
        candidates = [label.sector for label in space.basis if label.weight == w]
        sector = candidates[rng.integers(len(candidates))]
        psi[space.index(sector, w)] = np.sqrt(p)
    return DensityMatrix.from_vector(space, psi)

def pure_state_trace_norm(rho:DensityMatrix, tol:float=DEFAULT_TOLERANCES.channel) -> float:
    ''' Closed-form ||C(rho)^Gamma||_1 = (sum_m sqrt(q_m))^2 for a pure rho, q_m = Tr(Pi_m rho)

        For a standard-form state with one irrep per weight q_m = p_{j,m}.
    '''
    global _display_warned
    purity = float(np.trace(rho.matrix @ rho.matrix).real)
    if abs(purity - 1) > tol:
        raise DomainError(f'Monotone Error: closed form needs a pure state (purity {purity!r})')
    if not _display_warned:
        logger.warning('pairwise A_N display with j != j\' and m != m\' does not equal ((sum sqrt p)^2 - 1)/2; '
                       'using the trace-norm form (sum over unordered distinct (j, m) pairs)')
        _display_warned = True
    q = [float(np.trace(rho.space.weight_projector(w) @ rho.matrix).real) for w in rho.space.weights()]
    return float(sum(np.sqrt(max(x, 0.0)) for x in q) ** 2)


def generator_expectations(rho:DensityMatrix) -> dict:
    '''<J_x>, <J_y>, <J_z> for SU2 or <N> for U1'''
    if rho.space.group is GroupKind.U1:
        charge = np.diag([label.weight for label in rho.space.basis])
        return {'N': float(np.trace(charge @ rho.matrix).real)}
    gens = generators(rho.space)
    return {name: float(np.trace(gens[name] @ rho.matrix).real) for name in ('J_x', 'J_y', 'J_z')}
