"""Finite-group representations across several Hilbert spaces, and collapsing them into one.

The pieces fit together like this. Each variable's space carries a matrix
representation of the symmetry group; the transition ``S_AB = M_ab^-1``
carries A-coordinates to B-coordinates and should map one representation
onto the other by similarity. When every ``S`` is unitary the spaces are
rigidly superimposable and :func:`collapse` merges them into a single
space with an unrestricted Born rule, then checks that rule reproduces
every restricted probability of the original system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from . import arrow, hilbert
from .engine import GivSystem, TransitionMatrix, restricted_born
from .errors import (
    CollapseInconsistency,
    DimensionMismatch,
    NonUnitaryTransition,
    SameVariable,
    SingularEmbedding,
    SpaceMismatch,
)
from .hilbert import StateVector, commutator

MAX_ORDER = 24
COLLAPSE_TOL = 1e-9


class FiniteGroup:
    """A group given by its multiplication table; ``table[x][y]`` is the product ``xy``."""

    def __init__(self, elements: Sequence[str], table: Mapping[str, Mapping[str, str]], identity: str):
        self.elements = tuple(elements)
        if len(self.elements) > MAX_ORDER:
            raise ValueError(f"groups are limited to order {MAX_ORDER}, got {len(self.elements)}")
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("duplicate group elements")
        self.identity = identity
        self.table = {x: dict(table[x]) for x in self.elements}
        self._verify()
        self._inverse = {
            x: next(y for y in self.elements if self.table[x][y] == identity) for x in self.elements
        }

    def _verify(self) -> None:
        els = set(self.elements)
        if self.identity not in els:
            raise ValueError("identity is not an element")
        for x, y in product(self.elements, repeat=2):
            if self.table[x][y] not in els:
                raise ValueError(f"table not closed: {x}*{y} = {self.table[x][y]!r}")
        for x in self.elements:
            if self.table[self.identity][x] != x or self.table[x][self.identity] != x:
                raise ValueError(f"identity law fails for {x!r}")
            if not any(self.table[x][y] == self.identity for y in self.elements):
                raise ValueError(f"{x!r} has no inverse")
        for x, y, z in product(self.elements, repeat=3):
            if self.table[self.table[x][y]][z] != self.table[x][self.table[y][z]]:
                raise ValueError(f"associativity fails for ({x}, {y}, {z})")

    def __len__(self) -> int:
        return len(self.elements)

    def mul(self, x: str, y: str) -> str:
        return self.table[x][y]

    def inverse(self, x: str) -> str:
        return self._inverse[x]


def cyclic_group(n: int, prefix: str = "r") -> FiniteGroup:
    els = ["e"] + [f"{prefix}{k}" for k in range(1, n)]
    table = {els[i]: {els[j]: els[(i + j) % n] for j in range(n)} for i in range(n)}
    return FiniteGroup(els, table, "e")


@dataclass(frozen=True, eq=False)
class Representation:
    group: FiniteGroup
    space_label: str
    matrices: Mapping[str, np.ndarray]
    projective: bool = False

    def __post_init__(self):
        mats = {x: hilbert.as_matrix(self.matrices[x]) for x in self.group.elements}
        dims = {m.shape[0] for m in mats.values()}
        if len(dims) != 1:
            raise DimensionMismatch(f"representation matrices have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self) -> int:
        return next(iter(self.matrices.values())).shape[0]

    def __getitem__(self, element: str) -> np.ndarray:
        return self.matrices[element]


def verify_representation(rep: Representation, tol: float = COLLAPSE_TOL) -> tuple[bool, float]:
    """Largest ``|G(x)G(y) - G(xy)|`` over all pairs; with ``projective`` set, up to a best-fit phase."""
    g = rep.group
    worst = 0.0
    for x, y in product(g.elements, repeat=2):
        lhs = rep[x] @ rep[y]
        rhs = rep[g.mul(x, y)]
        if rep.projective:
            overlap = np.vdot(rhs, lhs)
            if abs(overlap) > 0:
                rhs = rhs * (overlap / abs(overlap))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst <= tol, worst


def generate_matrix_group(
    generators: Mapping[str, np.ndarray],
    space_label: str,
    tol: float = 1e-9,
) -> tuple[FiniteGroup, Representation]:
    """Close a set of matrices under multiplication; elements are named by the words reaching them.

    The element named ``"g*h"`` is represented by ``G(g) @ G(h)``.
    """
    gens = {k: hilbert.as_matrix(v) for k, v in generators.items()}
    dim = next(iter(gens.values())).shape[0]
    names = ["e"]
    mats = [np.eye(dim, dtype=complex)]

    def find(m):
        for k, other in enumerate(mats):
            if np.max(np.abs(m - other)) <= tol:
                return k
        return -1

    frontier = [0]
    while frontier:
        nxt = []
        for k in frontier:
            for gname, gm in gens.items():
                prod_ = mats[k] @ gm
                if find(prod_) < 0:
                    if len(mats) >= MAX_ORDER:
                        raise ValueError(f"generated group exceeds order {MAX_ORDER}")
                    word = gname if names[k] == "e" else f"{names[k]}*{gname}"
                    names.append(word)
                    mats.append(prod_)
                    nxt.append(len(mats) - 1)
        frontier = nxt
    table = {
        names[i]: {names[j]: names[find(mats[i] @ mats[j])] for j in range(len(names))}
        for i in range(len(names))
    }
    group = FiniteGroup(names, table, "e")
    return group, Representation(group, space_label, dict(zip(names, mats)))


def represent_words(group: FiniteGroup, generators: Mapping[str, np.ndarray], space_label: str) -> Representation:
    """Evaluate every element's word with another set of generator matrices."""
    dim = next(iter(generators.values())).shape[0]
    mats = {}
    for name in group.elements:
        m = np.eye(dim, dtype=complex)
        if name != "e":
            for g in name.split("*"):
                m = m @ np.asarray(generators[g], dtype=complex)
        mats[name] = m
    return Representation(group, space_label, mats)


def variable_operator(system: GivSystem, variable: str, space: str) -> np.ndarray:
    """The operator of ``variable`` written in ``space``: M diag(eigenvalues) M^-1."""
    m = system.embedding(space, variable)
    return m @ system.variable(variable).operator() @ np.linalg.inv(m)


def variable_representations(
    system: GivSystem, generators: Sequence[str] | None = None, tol: float = 1e-9
) -> tuple[FiniteGroup, dict[str, Representation]]:
    """Treat the variables themselves as symmetry operators and represent their group in every space.

    The group is generated in the first space; each other space gets its
    matrices from its own embeddings, independently of any ``S`` matrix.
    """
    gens = list(generators or system.ids)
    first = system.ids[0]
    group, rep0 = generate_matrix_group(
        {g: variable_operator(system, g, first) for g in gens}, first, tol
    )
    reps = {first: rep0}
    for space in system.ids[1:]:
        reps[space] = represent_words(
            group, {g: variable_operator(system, g, space) for g in gens}, space
        )
    return group, reps


def build_S_from_parallel_axes(system: GivSystem, a: str, b: str) -> TransitionMatrix:
    """S_AB, carrying A-space coordinates to B-space coordinates: the inverse of M_ab."""
    if a == b:
        raise SameVariable(f"S is only defined between different variables, got {a!r} twice")
    m = system.embedding(a, b)
    if np.linalg.cond(m) > 1e12:
        raise SingularEmbedding(f"M_{a}{b} is singular (cond {np.linalg.cond(m):.2e})")
    return TransitionMatrix(a, b, np.linalg.inv(m), kind="similarity")


@dataclass(frozen=True)
class EquivalenceCertificate:
    from_space: str
    to_space: str
    S: TransitionMatrix
    unitarity_defect: float
    similarity_defect: float
    tol: float

    @property
    def valid(self) -> bool:
        return self.unitarity_defect <= self.tol and self.similarity_defect <= self.tol


def generalized_equivalence_check(
    rep_a: Representation, rep_b: Representation, s, tol: float = COLLAPSE_TOL
) -> EquivalenceCertificate:
    s_mat = s.matrix if isinstance(s, TransitionMatrix) else hilbert.as_matrix(s)
    if rep_a.dim != rep_b.dim or s_mat.shape[0] != rep_a.dim:
        raise DimensionMismatch(f"dimensions {rep_a.dim}, {rep_b.dim}, S {s_mat.shape}")
    if rep_a.group is not rep_b.group and rep_a.group.elements != rep_b.group.elements:
        raise ValueError("representations belong to different groups")
    s_inv = np.linalg.inv(s_mat)
    sim = max(
        float(np.max(np.abs(rep_b[x] - s_mat @ rep_a[x] @ s_inv))) for x in rep_a.group.elements
    )
    tm = s if isinstance(s, TransitionMatrix) else TransitionMatrix(
        rep_a.space_label, rep_b.space_label, s_mat, kind="similarity"
    )
    return EquivalenceCertificate(
        rep_a.space_label, rep_b.space_label, tm, hilbert.unitarity_defect(s_mat), sim, tol
    )


def diagonalizer_unitarity(b_in_a, tol: float = hilbert.NORM_TOL) -> tuple[np.ndarray, float]:
    """Diagonalize a symmetry operator and report how far the diagonalizer is from unitary.

    Raises :class:`NotUnitaryInput` when the operator itself is not unitary,
    which is the situation where nothing forces S to be unitary.
    """
    _, s = hilbert.diagonalize_unitary(b_in_a, tol)
    return s, hilbert.unitarity_defect(s)


def invariance_eigenvalues(rep: Representation, element: str, eigenvectors: Sequence[StateVector]):
    """Rayleigh quotients and residual norms of ``G(element) v`` against ``v``."""
    mat = rep[element]
    lams, residuals = [], []
    for v in eigenvectors:
        if v.space_label != rep.space_label:
            raise SpaceMismatch(f"vector in {v.space_label!r}, representation in {rep.space_label!r}")
        if v.dim != rep.dim:
            raise DimensionMismatch(f"vector of dimension {v.dim} for a {rep.dim}-dim representation")
        x = v.components
        w = mat @ x
        lam = np.vdot(x, w) / np.vdot(x, x)
        lams.append(complex(lam))
        residuals.append(float(np.linalg.norm(w - lam * x)))
    return lams, residuals


def eigen_invariance_check(
    rep: Representation, element: str, eigenvectors: Sequence[StateVector], tol: float = COLLAPSE_TOL
) -> bool:
    """True when every vector is an eigenvector of ``G(element)`` with a unit-modulus eigenvalue."""
    if element not in rep.matrices:
        raise KeyError(element)
    lams, res = invariance_eigenvalues(rep, element, eigenvectors)
    return all(r <= tol and abs(abs(lam) - 1.0) <= tol for lam, r in zip(lams, res))


@dataclass(frozen=True, eq=False)
class MergedModel:
    """One Hilbert space for the whole system.

    Axes are the eigenbasis of ``reference``; ``basis_changes[v]`` holds v's
    eigenvectors as columns in that space.
    """

    reference: str
    basis_changes: Mapping[str, np.ndarray]
    born_defect: float
    transition_consistency_defect: float
    unitarity_defects: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def vector(self, variable: str, index: int) -> StateVector:
        return StateVector("merged", self.basis_changes[variable][:, index], normalized=True)

    def probability(self, prepared: tuple[str, int], outcome: tuple[str, int]) -> float:
        """Unrestricted Born rule |<outcome|prepared>|^2 between any two eigenstates."""
        return hilbert.born_probability(self.vector(*outcome), self.vector(*prepared))


def transition_consistency_defect(system: GivSystem) -> float:
    """max over triples of |S_BC S_AB - S_AC|, i.e. going A->B->C equals going A->C."""
    ids = system.ids
    s = {
        (a, b): build_S_from_parallel_axes(system, a, b).matrix
        for a, b in product(ids, repeat=2)
        if a != b
    }
    s.update({(a, a): np.eye(system.dim) for a in ids})
    worst = 0.0
    for a, b, c in product(ids, repeat=3):
        worst = max(worst, float(np.max(np.abs(s[(b, c)] @ s[(a, b)] - s[(a, c)]))))
    return worst


def collapse(system: GivSystem, tol: float = COLLAPSE_TOL) -> MergedModel:
    """Merge all per-variable spaces into one, or explain why that is impossible.

    Raises :class:`NonUnitaryTransition` for the worst non-unitary S, and
    :class:`CollapseInconsistency` when every S is unitary but the merged
    Born rule still disagrees with some restricted probability.
    """
    ids = system.ids
    reference = min(ids)
    defects: dict[tuple[str, str], float] = {}
    for a, b in product(ids, repeat=2):
        if a != b:
            defects[(a, b)] = hilbert.unitarity_defect(build_S_from_parallel_axes(system, a, b).matrix)
    if defects:
        pair, worst = max(defects.items(), key=lambda kv: kv[1])
        if worst > tol:
            raise NonUnitaryTransition(pair, worst)

    changes = {v: np.array(system.embedding(reference, v)) for v in ids}
    born = 0.0
    worst_pair = (reference, reference)
    for v, w in product(ids, repeat=2):
        overlap = np.abs(changes[v].conj().T @ changes[w]) ** 2
        for i, j in product(range(system.dim), repeat=2):
            d = abs(overlap[i, j] - restricted_born(system.eigenstate(w, j), v, i))
            if d > born:
                born, worst_pair = d, (v, w)
    if born > tol:
        raise CollapseInconsistency(worst_pair, born)
    return MergedModel(reference, changes, born, transition_consistency_defect(system), defects)


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class SpinHalfReport:
    commutator_residual: float
    group_order: int
    representation_defect: float
    jz_basis_invariant_under_rz: bool
    jz_basis_invariant_under_rx: bool
    jz_vectors_failing_rx: int
    rotation_max_deviation: float
    rotation_at_half_pi: float
    grid: int

    @property
    def no_common_eigenbasis(self) -> bool:
        return self.jz_vectors_failing_rx == 2


def spin_half_bundle(grid: int = 181) -> SpinHalfReport:
    """Spin-1/2 checks: [Jx, Jy] = i Jz, no shared Jx/Jz eigenbasis, and cos^2(theta/2) transitions."""
    jx, jy, jz = SIGMA_X / 2, SIGMA_Y / 2, SIGMA_Z / 2
    residual = float(np.max(np.abs(commutator(jx, jy) - 1j * jz)))

    # rotations by pi about x and z generate the 8-element quaternion group
    group, rep = generate_matrix_group(
        {"Rx": expm(-1j * math.pi * jx), "Rz": expm(-1j * math.pi * jz)}, "Jz"
    )
    _, rep_defect = verify_representation(rep)
    basis = [hilbert.basis_vector("Jz", 2, k) for k in range(2)]
    rz_ok = eigen_invariance_check(rep, "Rz", basis)
    rx_failures = sum(not eigen_invariance_check(rep, "Rx", [v]) for v in basis)

    thetas = np.linspace(0.0, math.pi, grid)
    up = basis[0]
    worst = 0.0
    for t in thetas:
        rotated = StateVector("Jz", expm(-1j * t * jy) @ up.components)
        p = abs(hilbert.inner_product(up, rotated)) ** 2
        worst = max(worst, abs(p - arrow.spin_half_reference(t)))
    half = abs(hilbert.inner_product(up, StateVector("Jz", expm(-1j * math.pi / 2 * jy) @ up.components))) ** 2
    return SpinHalfReport(
        residual, len(group), rep_defect, rz_ok,
        rx_failures == 0, rx_failures, worst, float(half), grid,
    )
