"""The classical Arrow: a planar pointer whose every direction is a two-valued variable.

A variable ``V`` is an axis at angle ``dir_V``; its ``+`` outcome is the
arrow head settling at ``dir_V`` and its ``-`` outcome at ``dir_V + pi``.
The probability of ``+`` for an arrow released at angle ``theta`` from the
``+`` slot is ``f(theta)``, with ``f`` one of a family of admissible
probability functions.

Embedding geometry. For variables ``A`` and ``B`` let ``delta = dir_B -
dir_A`` (unreduced, in (-2pi, 2pi)) and split it as ``psi + k*pi`` with
``psi`` in [0, pi). The Pythagorean pair is built at ``psi`` and then
multiplied by ``J**k`` where ``J = [[0, -1], [1, 0]]`` represents turning
the apparatus by pi (which swaps the outcome labels). Keeping ``delta``
unreduced makes the isotropic embeddings exactly the rotations
``R(delta/2)``, so M_ab M_bc = M_ac and M_ba = M_ab^-1 hold with no stray
signs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cache, cached_property
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from . import engine
from .engine import GivState, GivSystem, VariableSpec, embed_pair
from .errors import (
    AngleOutOfRange,
    ConstraintViolation,
    DegenerateDirections,
    UnknownVariable,
)
from .hilbert import StateVector

TWO_PI = 2.0 * math.pi
ADMISSION_GRID = 1001
ADMISSION_TOL = 1e-12
CONSTRAINT_TOL = 1e-9
J = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class ProbabilityFunction:
    """An admissible f on [0, pi]: f(0) = 1, f(pi) = 0, values in [0, 1].

    ``complement``, if given, must equal 1 - f; it lets square roots of
    1 - f near the axes be taken without cancellation.
    """

    name: str
    fn: Callable = field(repr=False, compare=False)
    complement: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        grid = np.linspace(0.0, math.pi, ADMISSION_GRID)
        vals = np.array([float(self.fn(t)) for t in grid])
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{self.name}: non-finite values on [0, pi]")
        if abs(vals[0] - 1.0) > ADMISSION_TOL or abs(vals[-1]) > ADMISSION_TOL:
            raise ValueError(f"{self.name}: need f(0) = 1 and f(pi) = 0, got {vals[0]!r}, {vals[-1]!r}")
        if vals.min() < -ADMISSION_TOL or vals.max() > 1.0 + ADMISSION_TOL:
            raise ValueError(f"{self.name}: values leave [0, 1]")
        if self.complement is not None:
            comp = np.array([float(self.complement(t)) for t in grid])
            if np.max(np.abs(vals + comp - 1.0)) > ADMISSION_TOL:
                raise ValueError(f"{self.name}: complement does not add up to 1 - f")

    def __call__(self, theta):
        return self.fn(theta)

    # constraint checks are cached per instance; fn never changes
    @cached_property
    def closure_defect(self) -> float:
        return c2_closure_defect(self)

    @cached_property
    def composes_additively(self) -> bool:
        return isotropy_scan([self], grid=19, tol=CONSTRAINT_TOL)[0].passes


@cache
def linear() -> ProbabilityFunction:
    return ProbabilityFunction("linear", lambda t: 1.0 - t / math.pi, lambda t: t / math.pi)


@cache
def quadratic() -> ProbabilityFunction:
    return ProbabilityFunction("quadratic", lambda t: 1.0 - (t / math.pi) ** 2, lambda t: (t / math.pi) ** 2)


@cache
def cosine_squared() -> ProbabilityFunction:
    return ProbabilityFunction(
        "cosine_squared", lambda t: math.cos(t / 2.0) ** 2, lambda t: math.sin(t / 2.0) ** 2
    )


def custom(name: str, fn: Callable, complement: Callable | None = None) -> ProbabilityFunction:
    return ProbabilityFunction(name, fn, complement)


BUILTIN_FUNCTIONS: dict[str, Callable[[], ProbabilityFunction]] = {
    "linear": linear,
    "quadratic": quadratic,
    "cosine_squared": cosine_squared,
}


def named_function(name: str) -> ProbabilityFunction:
    try:
        return BUILTIN_FUNCTIONS[name]()
    except KeyError:
        raise ValueError(f"unknown probability function {name!r}; known: {sorted(BUILTIN_FUNCTIONS)}") from None


class SymmetryLevel(str, Enum):
    NONE = "none"
    C2_APPARATUS = "c2_apparatus"
    C2_SPACETIME = "c2_spacetime"
    ISOTROPIC = "isotropic"


@dataclass(frozen=True)
class ArrowConfig:
    """Directions (radians) and per-eigenvalue probability functions for each variable.

    ``functions[v] = (f_plus, f_minus)``. Slots are always antipodal, so the
    angle identities between the b+/a+ and b-/a- angles hold at every level.
    ``c2_spacetime`` additionally needs f(t) + f(pi - t) = 1, and
    ``isotropic`` needs a Hilbert angle that is additive in t.
    """

    directions: Mapping[str, float]
    functions: Mapping[str, tuple[ProbabilityFunction, ProbabilityFunction]]
    symmetry_level: SymmetryLevel = SymmetryLevel.NONE

    def __post_init__(self):
        level = SymmetryLevel(self.symmetry_level)
        object.__setattr__(self, "symmetry_level", level)
        dirs = {str(k): float(v) % TWO_PI for k, v in self.directions.items()}
        object.__setattr__(self, "directions", dirs)
        funcs = {str(k): tuple(v) for k, v in self.functions.items()}
        object.__setattr__(self, "functions", funcs)

        if set(funcs) != set(dirs):
            raise ConstraintViolation("every variable needs exactly one (f_plus, f_minus) pair")
        if level in (SymmetryLevel.C2_SPACETIME, SymmetryLevel.ISOTROPIC):
            for v, (fp, fm) in funcs.items():
                if fp != fm:
                    raise ConstraintViolation(f"{level.value}: f_plus and f_minus differ for {v!r}")
                if fp.closure_defect > CONSTRAINT_TOL:
                    raise ConstraintViolation(f"{level.value}: {fp.name} violates f(t) + f(pi - t) = 1")
        if level is SymmetryLevel.ISOTROPIC:
            shared = {fp for fp, _ in funcs.values()}
            if len(shared) > 1:
                raise ConstraintViolation("isotropic: all variables must share one f")
            f = next(iter(shared), None)
            if f is not None and not f.composes_additively:
                raise ConstraintViolation(f"isotropic: {f.name} does not compose additively")

    @classmethod
    def uniform(
        cls,
        directions: Mapping[str, float],
        f: ProbabilityFunction | None = None,
        level: SymmetryLevel | str = SymmetryLevel.ISOTROPIC,
    ) -> "ArrowConfig":
        f = f or cosine_squared()
        return cls(directions, {v: (f, f) for v in directions}, level)


class ArrowSystem(GivSystem):
    """A :class:`GivSystem` that also remembers the Arrow geometry it came from."""

    def __init__(self, config: ArrowConfig, variables, embeddings):
        super().__init__(variables, embeddings)
        self.config = config


def arrow_embedding(f_plus, f_minus, delta: float) -> np.ndarray:
    """M_ab for the head of B at angle ``delta`` counter-clockwise from the head of A."""
    if not -TWO_PI < delta < TWO_PI:
        raise AngleOutOfRange(f"relative angle {delta!r} outside (-2pi, 2pi)")
    psi = delta % math.pi
    k = int(round((delta - psi) / math.pi))
    base = embed_pair(f_plus, f_minus, psi, psi).matrix
    return base @ np.linalg.matrix_power(J, k) if k >= 0 else base @ np.linalg.matrix_power(J.T, -k)


def build_arrow_system(config: ArrowConfig) -> ArrowSystem:
    ids = list(config.directions)
    if len(ids) < 1:
        raise ValueError("an Arrow system needs at least one variable")
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            d = (config.directions[b] - config.directions[a]) % math.pi
            if min(d, math.pi - d) < 1e-12:
                raise DegenerateDirections(f"{a!r} and {b!r} share an axis")
    variables = [VariableSpec(v, ("+", "-"), (1.0, -1.0)) for v in ids]
    embeddings = {}
    for a in ids:
        fp, fm = config.functions[a]
        for b in ids:
            if a == b:
                continue
            delta = config.directions[b] - config.directions[a]
            embeddings[(a, b)] = arrow_embedding(fp, fm, delta)
    return ArrowSystem(config, variables, embeddings)


def prepare(system: ArrowSystem, orientation: float) -> GivState:
    """The state of an arrow released pointing at ``orientation`` (radians)."""
    n = float(orientation) % TWO_PI
    comps = {}
    for v in system.ids:
        fp, fm = system.config.functions[v]
        col = arrow_embedding(fp, fm, n - system.config.directions[v])[:, 0]
        comps[v] = StateVector(v, col, normalized=True)
    return GivState(system, comps, label=f"orientation={n!r}")


def c2_closure_defect(f: Callable, grid_size: int = 181) -> float:
    """max over a uniform grid on [0, pi] of |f(t) + f(pi - t) - 1|."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    grid = np.linspace(0.0, math.pi, grid_size)
    return float(max(abs(f(t) + f(math.pi - t) - 1.0) for t in grid))


def hilbert_angle(f: Callable, theta: float) -> float:
    """Angle between the two state vectors in Hilbert space for physical angle theta."""
    p, q = engine.probability_pair(f, theta)
    return math.atan2(math.sqrt(q), math.sqrt(p))


def _rotation(w: float) -> np.ndarray:
    c, s = math.cos(w), math.sin(w)
    return np.array([[c, -s], [s, c]])


def composition_defect(f: Callable, theta1: float, theta2: float) -> float:
    """max-norm of M(t1) M(t2) - M(t1 + t2) with M(t) the rotation by hilbert_angle(f, t)."""
    for t in (theta1, theta2, theta1 + theta2):
        if not -1e-12 <= t <= math.pi + 1e-12:
            raise AngleOutOfRange(f"angle {t!r} outside [0, pi]")
    total = min(theta1 + theta2, math.pi)
    lhs = _rotation(hilbert_angle(f, theta1)) @ _rotation(hilbert_angle(f, theta2))
    return float(np.max(np.abs(lhs - _rotation(hilbert_angle(f, total)))))


@dataclass(frozen=True)
class IsotropyRow:
    name: str
    max_composition_defect: float
    max_closure_defect: float
    passes: bool


def isotropy_scan(
    candidates: Sequence[ProbabilityFunction], grid: int = 91, tol: float = 1e-9
) -> list[IsotropyRow]:
    """Check composition additivity on the triangle t1 + t2 <= pi and C2 closure, per candidate."""
    if not candidates:
        raise ValueError("isotropy_scan needs at least one candidate")
    if grid < 2:
        raise ValueError("grid must be at least 2")
    ts = np.linspace(0.0, math.pi, grid)
    rows = []
    for f in candidates:
        worst = 0.0
        for i, t1 in enumerate(ts):
            # t1 + t2 <= pi on the grid means j <= grid - 1 - i
            for t2 in ts[: grid - i]:
                worst = max(worst, composition_defect(f, t1, t2))
        closure = c2_closure_defect(f, grid)
        rows.append(IsotropyRow(f.name, worst, closure, worst <= tol and closure <= tol))
    return rows


SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])


def spin_half_reference(theta: float) -> float:
    """|<up| exp(-i theta sigma_y / 2) |up>|^2 for a spin-1/2."""
    if not -1e-12 <= theta <= math.pi + 1e-12:
        raise AngleOutOfRange(f"angle {theta!r} outside [0, pi]")
    rot = math.cos(theta / 2.0) * np.eye(2) - 1j * math.sin(theta / 2.0) * SIGMA_Y
    up = np.array([1.0, 0.0])
    return float(abs(up @ rot @ up) ** 2)


@dataclass(frozen=True)
class FrequencyTable:
    variable: str
    orientation: float
    outcomes: tuple[str, ...]
    counts: tuple[int, ...]
    probabilities: tuple[float, ...]
    trials: int
    seed: int
    stream: int = 0

    @property
    def frequencies(self) -> np.ndarray:
        return np.array(self.counts) / self.trials

    @property
    def standard_errors(self) -> np.ndarray:
        """Binomial standard errors of the empirical frequencies."""
        p = self.frequencies
        return np.sqrt(p * (1.0 - p) / self.trials)


def sample_frequencies(
    system: ArrowSystem,
    orientation: float,
    variable: str,
    n: int,
    seed: int,
    stream: int = 0,
) -> FrequencyTable:
    """Release the arrow ``n`` times at ``orientation`` and measure ``variable`` each time."""
    if variable not in system.ids:
        raise UnknownVariable(variable)
    if n < 1:
        raise ValueError("need at least one trial")
    state = prepare(system, orientation)
    rng = engine.make_rng(seed, stream)
    counts = engine.sample_counts(state, variable, n, rng)
    probs = engine.outcome_distribution(state, variable)
    return FrequencyTable(
        variable,
        float(orientation) % TWO_PI,
        system.variable(variable).outcome_labels,
        tuple(int(c) for c in counts),
        tuple(float(p) for p in probs),
        n,
        int(seed),
        stream,
    )
