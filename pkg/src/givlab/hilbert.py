"""Finite-dimensional complex Hilbert spaces.

Vectors carry the label of the space they live in, and contracting two
vectors from different spaces is an error. That single rule is what keeps
the multi-space engine honest: a probability for variable ``A`` can only
be computed from vectors in ``A``'s own space.

Matrices are plain complex ``numpy`` arrays; :func:`as_matrix` is the
validating entry point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg as sla

from .errors import (
    DimensionMismatch,
    NotNormalized,
    NotUnitaryInput,
    ProbabilityOutOfRange,
    SpaceMismatch,
)

NORM_TOL = 1e-10
ROUND_TRIP_TOL = 1e-9
PROB_SLACK = 1e-12
DEGENERACY_TOL = 1e-8


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a read-only complex square matrix, validating shape and finiteness."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return _frozen(arr)


@dataclass(frozen=True, eq=False)
class StateVector:
    space_label: str
    components: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=complex).reshape(-1)
        if comps.size < 1:
            raise DimensionMismatch("a state vector needs at least one component")
        if not np.all(np.isfinite(comps)):
            raise ValueError("state vector has non-finite components")
        if self.normalized and abs(np.vdot(comps, comps).real - 1.0) > NORM_TOL:
            raise NotNormalized(
                f"norm^2 = {np.vdot(comps, comps).real!r} in space {self.space_label!r}"
            )
        object.__setattr__(self, "components", _frozen(comps))

    @property
    def dim(self) -> int:
        return self.components.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise NotNormalized("cannot normalize the zero vector")
        return StateVector(self.space_label, self.components / n, normalized=True)

    def __repr__(self) -> str:
        return f"StateVector({self.space_label!r}, {np.round(self.components, 12).tolist()})"


def basis_vector(space_label: str, dim: int, index: int) -> StateVector:
    """Axis ``index`` of the standard basis of a ``dim``-dimensional space."""
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return StateVector(space_label, e, normalized=True)


def _check_same_space(u: StateVector, v: StateVector) -> None:
    if u.space_label != v.space_label:
        raise SpaceMismatch(
            f"cannot contract a vector of {u.space_label!r} with one of {v.space_label!r}"
        )
    if u.dim != v.dim:
        raise DimensionMismatch(f"dimensions differ: {u.dim} vs {v.dim}")


def inner_product(u: StateVector, v: StateVector) -> complex:
    """<u|v>, conjugate-linear in ``u``."""
    _check_same_space(u, v)
    return complex(np.vdot(u.components, v.components))


def clamp_probability(p: float, slack: float = PROB_SLACK) -> float:
    """Clamp rounding noise into [0, 1]; anything further out is a modelling bug."""
    if not np.isfinite(p) or p < -slack or p > 1.0 + slack:
        raise ProbabilityOutOfRange(f"probability {p!r} outside [0, 1]")
    return float(min(1.0, max(0.0, p)))


def born_probability(outcome_axis: StateVector, psi: StateVector) -> float:
    """|<outcome_axis|psi>|^2 for two normalized vectors of the same space."""
    for vec, name in ((outcome_axis, "outcome_axis"), (psi, "psi")):
        if abs(vec.norm() ** 2 - 1.0) > NORM_TOL:
            raise NotNormalized(f"{name} has norm^2 {vec.norm() ** 2!r}")
    amp = inner_product(outcome_axis, psi)
    return clamp_probability(abs(amp) ** 2)


def commutator(a, b) -> np.ndarray:
    """AB - BA."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"commutator of shapes {a.shape} and {b.shape}")
    return a @ b - b @ a


def unitarity_defect(m) -> float:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"not square: {m.shape}")
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def is_unitary(m, tol: float = NORM_TOL) -> tuple[bool, float]:
    """Return ``(defect <= tol, defect)`` with defect the max-norm of M^dag M - I."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    defect = unitarity_defect(m)
    return defect <= tol, defect


def is_orthonormal_set(vectors: Sequence[StateVector], tol: float = NORM_TOL) -> tuple[bool, float]:
    """Max over pairs of |<v_i|v_j> - delta_ij|, and whether it is within ``tol``."""
    if not vectors:
        return True, 0.0
    for v in vectors[1:]:
        _check_same_space(vectors[0], v)
    gram = np.array([[inner_product(u, v) for v in vectors] for u in vectors])
    defect = float(np.max(np.abs(gram - np.eye(len(vectors)))))
    return defect <= tol, defect


def _principal_phase(z: complex) -> float:
    phi = float(np.angle(z))
    # (-pi, pi]: fold the lower edge over
    if phi <= -np.pi + DEGENERACY_TOL:
        phi = np.pi
    return phi


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    mags = np.abs(v)
    k = int(np.flatnonzero(mags >= mags.max() - 1e-9)[0])
    return v * (abs(v[k]) / v[k])


def _canonical_cluster_basis(q: np.ndarray) -> list[np.ndarray]:
    """Deterministic orthonormal basis of span(q), independent of which basis q holds.

    Projects the standard axes onto the subspace in index order and runs
    Gram-Schmidt, so a fully degenerate cluster returns the standard axes.
    """
    n, k = q.shape
    proj = q @ q.conj().T
    out: list[np.ndarray] = []
    for i in range(n):
        v = proj[:, i].copy()
        for w in out:
            v -= np.vdot(w, v) * w
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            out.append(_canonical_phase(v / nv))
        if len(out) == k:
            break
    out.sort(key=lambda w: int(np.flatnonzero(np.abs(w) >= np.abs(w).max() - 1e-9)[0]))
    return out


def diagonalize_unitary(u, tol: float = NORM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases and a unitary ``S`` with ``S @ U @ S^-1`` diagonal.

    Phases lie in (-pi, pi] and are sorted ascending. Eigenvectors within a
    degenerate cluster (phases closer than 1e-8) are re-orthonormalized and
    ordered by the index of their largest component, which makes the result
    deterministic: ``diagonalize_unitary(I)`` returns ``S = I``.
    """
    u = as_matrix(u)
    ok, defect = is_unitary(u, tol)
    if not ok:
        raise NotUnitaryInput(f"unitarity defect {defect:.3e} exceeds {tol:.1e}")
    # complex Schur form of a normal matrix is diagonal with unitary Z
    t, z = sla.schur(u, output="complex")
    phases = np.array([_principal_phase(x) for x in np.diag(t)])
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    z = z[:, order]

    columns: list[np.ndarray] = []
    start = 0
    n = len(phases)
    while start < n:
        stop = start + 1
        while stop < n and phases[stop] - phases[stop - 1] < DEGENERACY_TOL:
            stop += 1
        columns.extend(_canonical_cluster_basis(z[:, start:stop]))
        start = stop
    v = np.column_stack(columns)
    s = v.conj().T
    return phases, _frozen(s)
