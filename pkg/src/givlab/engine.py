"""Multi-Hilbert-space states, restricted Born rule, measurement and interference.

Every variable owns a Hilbert space whose standard axes are that variable's
eigenstates. A state is a tuple with one component per space. Probabilities
for a variable are computed only from the component in that variable's own
space; nothing in this module contracts vectors across spaces.

Embedding convention: ``system.embedding(A, B)`` is the matrix M_ab whose
column ``j`` is B's ``j``-th eigenstate written in A's space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from . import hilbert
from .errors import (
    AngleOutOfRange,
    DimensionMismatch,
    IndexOutOfRange,
    NotNormalized,
    SameVariable,
    SingularAngle,
    SpaceMismatch,
    UnknownVariable,
)
from .hilbert import NORM_TOL, ROUND_TRIP_TOL, StateVector

ProbabilityFn = Callable[[float], float]

_ANGLE_SLACK = 1e-12


def _angle(theta: float) -> float:
    theta = float(theta)
    if not (-_ANGLE_SLACK <= theta <= math.pi + _ANGLE_SLACK):
        raise AngleOutOfRange(f"angle {theta!r} outside [0, pi]")
    return min(max(theta, 0.0), math.pi)


def _prob(f: ProbabilityFn, theta: float) -> float:
    return hilbert.clamp_probability(float(f(_angle(theta))))


def probability_pair(f: ProbabilityFn, theta: float) -> tuple[float, float]:
    """(f, 1 - f) at theta. Uses ``f.complement`` when present, since 1 - f cancels badly near f = 1."""
    p = _prob(f, theta)
    comp = getattr(f, "complement", None)
    if comp is None:
        return p, 1.0 - p
    return p, hilbert.clamp_probability(float(comp(_angle(theta))))


@dataclass(frozen=True)
class VariableSpec:
    id: str
    outcome_labels: tuple[str, ...]
    eigenvalues: tuple[complex, ...] = ()

    def __post_init__(self):
        labels = tuple(str(x) for x in self.outcome_labels)
        if len(labels) < 2:
            raise ValueError(f"variable {self.id!r} needs at least two outcomes")
        if len(set(labels)) != len(labels):
            raise ValueError(f"variable {self.id!r} has repeated outcome labels")
        eig = tuple(complex(x) for x in self.eigenvalues) or tuple(
            complex(k) for k in range(len(labels))
        )
        if len(eig) != len(labels):
            raise DimensionMismatch(
                f"variable {self.id!r}: {len(eig)} eigenvalues for {len(labels)} outcomes"
            )
        object.__setattr__(self, "outcome_labels", labels)
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def dim(self) -> int:
        return len(self.outcome_labels)

    def operator(self) -> np.ndarray:
        """The variable as a diagonal matrix acting in its own space."""
        return np.diag(np.array(self.eigenvalues, dtype=complex))


@dataclass(frozen=True)
class TransitionMatrix:
    """A matrix relating two variables' spaces.

    ``kind="embedding"`` is M_ab (``from_variable=A``, ``to_variable=B``):
    its columns are B's eigenstates in A's space and must have unit norm.
    ``kind="similarity"`` is S_AB, carrying A-space coordinates to B-space
    coordinates; no column constraint applies.
    """

    from_variable: str
    to_variable: str
    matrix: np.ndarray
    kind: str = "embedding"

    def __post_init__(self):
        m = hilbert.as_matrix(self.matrix)
        if self.kind not in ("embedding", "similarity"):
            raise ValueError(f"unknown transition kind {self.kind!r}")
        if self.kind == "embedding":
            norms = np.linalg.norm(m, axis=0)
            bad = np.max(np.abs(norms - 1.0))
            if bad > NORM_TOL:
                raise NotNormalized(
                    f"embedding {self.from_variable}->{self.to_variable} has a column "
                    f"norm off by {bad:.3e}"
                )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def embed_pair(
    f_plus: ProbabilityFn,
    f_minus: ProbabilityFn,
    theta_pp: float,
    theta_mm: float,
    *,
    from_variable: str = "A",
    to_variable: str = "B",
    minus_sign: bool = True,
) -> TransitionMatrix:
    """Two-outcome Pythagorean embedding of B's eigenstates into A's space.

    Column 1 is (b+) written against the A axes using ``f_plus`` at the
    b+/a+ angle, column 2 is (b-) using ``f_minus`` at the b-/a- angle.
    The remaining coordinate of each column is fixed by normalization.
    ``minus_sign=False`` drops the phase on the a+ coordinate of (b-),
    which breaks orthogonality even for symmetric configurations.
    """
    fp, gp = probability_pair(f_plus, theta_pp)
    fm, gm = probability_pair(f_minus, theta_mm)
    sign = -1.0 if minus_sign else 1.0
    m = np.array(
        [
            [math.sqrt(fp), sign * math.sqrt(gm)],
            [math.sqrt(gp), math.sqrt(fm)],
        ],
        dtype=complex,
    )
    return TransitionMatrix(from_variable, to_variable, m)


def orthogonality_defect(
    f_plus: ProbabilityFn, f_minus: ProbabilityFn, theta_pp: float, theta_mm: float
) -> float:
    """<b-|b+> in A's space for the embedded pair; zero iff the two columns are orthogonal."""
    fp, gp = probability_pair(f_plus, theta_pp)
    fm, gm = probability_pair(f_minus, theta_mm)
    return math.sqrt(gp) * math.sqrt(fm) - math.sqrt(gm) * math.sqrt(fp)


def rotation_angle(f: ProbabilityFn, theta: float) -> float:
    p, q = probability_pair(f, theta)
    if p == 0.0:
        warnings.warn(SingularAngle(f"f({theta!r}) = 0, rotation angle set to pi/2"), stacklevel=3)
        return math.pi / 2
    return math.atan(math.sqrt(q) / math.sqrt(p))


def rotation_angles(f_plus: ProbabilityFn, f_minus: ProbabilityFn, theta: float) -> tuple[float, float]:
    """Angles by which the a+ and a- axes are turned onto b+ and b-, each in [0, pi/2]."""
    return rotation_angle(f_plus, theta), rotation_angle(f_minus, theta)


class GivSystem:
    """A set of variables, one Hilbert space each, and the embeddings between them.

    ``embeddings`` maps ordered pairs ``(A, B)`` to M_ab. Diagonal entries are
    filled with the identity. A missing reverse pair ``(B, A)`` is filled
    with M_ab^dagger when M_ab is unitary; otherwise it must be supplied.
    """

    def __init__(
        self,
        variables: Sequence[VariableSpec],
        embeddings: Mapping[tuple[str, str], np.ndarray],
    ):
        self.variables: tuple[VariableSpec, ...] = tuple(variables)
        if not self.variables:
            raise ValueError("a system needs at least one variable")
        ids = [v.id for v in self.variables]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate variable ids in {ids}")
        dims = {v.dim for v in self.variables}
        if len(dims) != 1:
            raise DimensionMismatch(f"all variables must share one dimension, got {sorted(dims)}")
        self.dim = dims.pop()
        self._by_id = {v.id: v for v in self.variables}

        table: dict[tuple[str, str], TransitionMatrix] = {}
        for (a, b), m in embeddings.items():
            self._require(a)
            self._require(b)
            tm = m if isinstance(m, TransitionMatrix) else TransitionMatrix(a, b, m)
            if tm.dim != self.dim:
                raise DimensionMismatch(f"embedding {a}->{b} has dimension {tm.dim}")
            table[(a, b)] = tm
        for a in ids:
            table[(a, a)] = TransitionMatrix(a, a, np.eye(self.dim))
        for a, b in product(ids, ids):
            if (a, b) in table:
                continue
            if (b, a) not in table:
                raise ValueError(f"no embedding given for the pair {a}, {b}")
            m = table[(b, a)].matrix
            if not hilbert.is_unitary(m, ROUND_TRIP_TOL)[0]:
                raise ValueError(
                    f"embedding {a}->{b} missing and {b}->{a} is not unitary, so it cannot be inferred"
                )
            table[(a, b)] = TransitionMatrix(a, b, m.conj().T)
        self._embeddings = table
        # states are immutable, so axes and eigenstates are built once
        self._axes: dict[tuple[str, int], StateVector] = {}
        self._eigen: dict[tuple[str, int], GivState] = {}

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.variables)

    def _require(self, var: str) -> VariableSpec:
        try:
            return self._by_id[var]
        except KeyError:
            raise UnknownVariable(var) from None

    def variable(self, var: str) -> VariableSpec:
        return self._require(var)

    def embedding(self, a: str, b: str) -> np.ndarray:
        """M_ab: column j is B's j-th eigenstate in A's space."""
        self._require(a)
        self._require(b)
        return self._embeddings[(a, b)].matrix

    def transition(self, a: str, b: str) -> TransitionMatrix:
        self._require(a)
        self._require(b)
        return self._embeddings[(a, b)]

    def axis(self, var: str, index: int) -> StateVector:
        self._require(var)
        if not 0 <= index < self.dim:
            raise IndexOutOfRange(f"outcome index {index} for {var!r} (dim {self.dim})")
        key = (var, index)
        if key not in self._axes:
            self._axes[key] = hilbert.basis_vector(var, self.dim, index)
        return self._axes[key]

    def eigenstate(self, var: str, index: int) -> "GivState":
        """The value state (var = outcome ``index``) as a tuple over all spaces."""
        self.axis(var, index)
        key = (var, index)
        if key not in self._eigen:
            comps = {
                a: StateVector(a, self.embedding(a, var)[:, index], normalized=True)
                for a in self.ids
            }
            self._eigen[key] = GivState(self, comps, eigen=key)
        return self._eigen[key]

    def state(self, components: Mapping[str, Sequence[complex]]) -> "GivState":
        """A general state from explicit per-space coordinates (normalized on entry)."""
        comps = {}
        for var in self.ids:
            if var not in components:
                raise UnknownVariable(f"no component supplied for {var!r}")
            comps[var] = StateVector(var, components[var]).normalize()
        extra = set(components) - set(self.ids)
        if extra:
            raise UnknownVariable(f"components for unknown variables {sorted(extra)}")
        return GivState(self, comps)

    def reciprocity_defect(self, a: str, b: str) -> float:
        """max |M_ba - M_ab^-1|; zero exactly when the two spaces agree on the pair."""
        inv = np.linalg.inv(self.embedding(a, b))
        return float(np.max(np.abs(self.embedding(b, a) - inv)))

    def compatible(self, a: str, b: str, tol: float = 1e-12) -> bool:
        """True when M_ab is a permutation matrix up to phases (shared eigenstates)."""
        mags = np.abs(self.embedding(a, b))
        near_one = np.abs(mags - 1.0) <= tol
        near_zero = mags <= tol
        if not np.all(near_one | near_zero):
            return False
        return bool(np.all(near_one.sum(axis=0) == 1) and np.all(near_one.sum(axis=1) == 1))


@dataclass(frozen=True, eq=False)
class GivState:
    system: GivSystem
    components: Mapping[str, StateVector]
    eigen: tuple[str, int] | None = None
    label: str = field(default="")

    def __post_init__(self):
        comps = dict(self.components)
        for var, vec in comps.items():
            self.system.variable(var)
            if vec.space_label != var:
                raise SpaceMismatch(f"component for {var!r} lives in {vec.space_label!r}")
            if vec.dim != self.system.dim:
                raise DimensionMismatch(f"component for {var!r} has dimension {vec.dim}")
            if abs(vec.norm() ** 2 - 1.0) > NORM_TOL:
                raise NotNormalized(f"component for {var!r} is not normalized")
        if set(comps) != set(self.system.ids):
            raise UnknownVariable(f"state must have one component per variable {self.system.ids}")
        object.__setattr__(self, "components", MappingProxyType(comps))

    @property
    def kind(self) -> str:
        return "eigenstate" if self.eigen is not None else "general"

    def component(self, var: str) -> StateVector:
        try:
            return self.components[var]
        except KeyError:
            raise UnknownVariable(var) from None


def restricted_born(state: GivState, variable: str, outcome_index: int) -> float:
    """Probability of outcome ``outcome_index`` of ``variable``, computed in that variable's space only."""
    axis = state.system.axis(variable, outcome_index)
    return hilbert.born_probability(axis, state.component(variable))


def outcome_distribution(state: GivState, variable: str) -> np.ndarray:
    comp = state.component(variable).components
    p = np.abs(comp) ** 2
    return np.array([hilbert.clamp_probability(x) for x in p])


def direct_probability(state: GivState, variable: str, index: int) -> float:
    return restricted_born(state, variable, index)


def indirect_probability(state: GivState, via: str, target: str, index: int) -> float:
    """Probability of ``target = index`` when ``via`` is measured first and the result discarded."""
    system = state.system
    system.variable(via)
    system.variable(target)
    if via == target:
        raise SameVariable(f"indirect route must pass through a different variable, got {via!r}")
    total = 0.0
    for j in range(system.dim):
        total += restricted_born(system.eigenstate(via, j), target, index) * restricted_born(
            state, via, j
        )
    return hilbert.clamp_probability(total)


def interference_deviation(state: GivState, via: str, target: str, index: int) -> float:
    """Direct minus indirect probability."""
    return direct_probability(state, target, index) - indirect_probability(
        state, via, target, index
    )


def interference_cross_term(state: GivState, via: str, target: str, index: int) -> float:
    """Cross term of |sum_j R_j|^2 with R_j = <t_i|v_j><v_j|psi>, all in the target's space.

    Only meaningful once the ``via`` eigenstates are orthonormal in the
    target's space (inserting the closure relation needs that); otherwise it
    is just a number and will not match :func:`interference_deviation`.
    """
    system = state.system
    if via == target:
        raise SameVariable(via)
    m = system.embedding(target, via)
    psi = state.component(target).components
    r = [m[index, j] * np.vdot(m[:, j], psi) for j in range(system.dim)]
    cross = 0.0
    for j in range(len(r)):
        for k in range(j + 1, len(r)):
            cross += 2.0 * (np.conj(r[j]) * r[k]).real
    return float(cross)


def joint_certainty_witnesses(system: GivSystem, a: str, b: str, tol: float = 1e-12) -> list[str]:
    """Search every eigenstate of the system for one that fixes both ``a`` and ``b``.

    Returns labels of the offending eigenstates; empty for incompatible pairs.
    """
    found = []
    for var in system.ids:
        for k in range(system.dim):
            st = system.eigenstate(var, k)
            pa = outcome_distribution(st, a)
            pb = outcome_distribution(st, b)
            if pa.max() >= 1.0 - tol and pb.max() >= 1.0 - tol:
                found.append(f"{var}[{k}]")
    return found


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Reproducible generator; independent streams share a seed but differ in ``stream``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def _draw(p: np.ndarray, u) -> np.ndarray:
    cdf = np.cumsum(p)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(p) - 1)


def measure(state: GivState, variable: str, rng: np.random.Generator) -> tuple[int, GivState]:
    """Sample one outcome and return it with the post-measurement eigenstate tuple."""
    p = outcome_distribution(state, variable)
    idx = int(_draw(p, rng.random()))
    return idx, state.system.eigenstate(variable, idx)


def sample_counts(state: GivState, variable: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Outcome counts of ``n`` independent measurements on fresh copies of ``state``.

    Consumes the generator exactly as ``n`` calls to :func:`measure` would.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    p = outcome_distribution(state, variable)
    idx = _draw(p, rng.random(n))
    return np.bincount(idx, minlength=len(p))
