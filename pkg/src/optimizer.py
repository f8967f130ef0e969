"""Constrained maximization of a Bob's steering value over angles and sharpness.

Search is a multi-start Nelder-Mead simplex (scipy) with an exterior
squared-residual penalty whose weight grows over a fixed schedule. Each
restart is independent; restart 0 starts from the caller's warm start or,
failing that, from the aligned configuration (every Bob measuring along
Alice's directions, constrained sharpness solved by linearity).
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from .analytic import chain_tables, setting_projector, decohere_matrix
from .constants import (
    CFFW_BOUND,
    CJWR_BOUND,
    DEFAULT_ITERATIONS,
    DEFAULT_RESTARTS,
    DEFAULT_SEED,
    FEASIBILITY_TOL,
    LAMBDA_MAX,
    LAMBDA_MIN,
    PENALTY_WEIGHTS,
    SIMPLEX_TOL,
    TSIRELSON_CFFW,
)
from .density import singlet
from .inequalities import CFFW, CJWR, KINDS, cffw_value, cjwr_bound, cjwr_value
from .model import (
    AliceConfig,
    BobConfig,
    DomainError,
    InfeasibleError,
    Scenario,
    direction_from_angles,
    direction_from_vector,
    uniform_weights,
)

logger = logging.getLogger(__name__)

EQ = "eq"
VIOLATE = "violate"

ANGLE_STEP = 0.3
LAMBDA_STEP = 0.05


# --- Problem definition ---


@dataclass(frozen=True)
class Objective:
    kind: str
    bob: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"objective kind must be one of {KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class Constraint:
    """Steering requirement on an earlier Bob: value == target, or value > bound."""

    bob: int
    kind: str = EQ
    target: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (EQ, VIOLATE):
            raise DomainError(f"constraint kind must be eq or violate, got {self.kind!r}")
        if self.kind == EQ and self.target is None:
            raise DomainError(f"equality constraint on Bob {self.bob} needs a target")


@dataclass(frozen=True)
class Budget:
    restarts: int = DEFAULT_RESTARTS
    iterations: int = DEFAULT_ITERATIONS

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 1:
            raise DomainError(f"budget must be positive, got {self.restarts},{self.iterations}")

    @classmethod
    def parse(cls, text):
        """Parse 'R,I' as restarts and iterations."""
        try:
            restarts, iterations = (int(part) for part in text.split(","))
        except ValueError:
            raise DomainError(f"budget must look like R,I, got {text!r}") from None
        return cls(restarts, iterations)


@dataclass(frozen=True)
class OptimizationProblem:
    """Search space and goal of one maximization.

    fixed_lambdas maps Bob index to a held sharpness; every other Bob's
    sharpness is free in [LAMBDA_MIN, LAMBDA_MAX]. Alice is gauge-fixed to
    alice_directions (default: coordinate axes) unless free_alice is set, in
    which case she is an orthonormal frame parameterized by three Euler angles.
    When free_bob_angles is off, every Bob measures along bob_directions
    (default: Alice's directions).
    """

    n_settings: int
    chain_length: int
    objective: Objective
    constraints: tuple = ()
    fixed_lambdas: tuple = ()
    state: Optional[object] = None
    free_alice: bool = False
    free_bob_angles: bool = True
    alice_directions: Optional[tuple] = None
    bob_directions: Optional[tuple] = None
    cjwr_limit: float = CJWR_BOUND
    start: Optional[Scenario] = None

    def __post_init__(self):
        if self.n_settings < 2:
            raise DomainError(f"need at least two settings, got {self.n_settings}")
        if self.chain_length < 1:
            raise DomainError("the Bob chain is nonempty")
        if self.objective.kind == CFFW and self.n_settings != 2:
            raise DomainError("CFFW is a two-setting functional")
        if not 1 <= self.objective.bob <= self.chain_length:
            raise DomainError(f"objective Bob {self.objective.bob} outside the chain")
        object.__setattr__(self, "constraints", tuple(self.constraints))
        fixed = dict(self.fixed_lambdas)
        object.__setattr__(self, "fixed_lambdas", tuple(sorted(fixed.items())))
        for bob, lam in fixed.items():
            if not 1 <= bob <= self.chain_length:
                raise DomainError(f"fixed sharpness for Bob {bob} outside the chain")
            if not 0.0 < lam <= 1.0:
                raise DomainError(f"sharpness must lie in (0, 1], got {lam}")
        for c in self.constraints:
            if not 1 <= c.bob < self.objective.bob:
                raise DomainError(
                    f"constraint on Bob {c.bob} must refer to a Bob before "
                    f"the objective Bob {self.objective.bob}"
                )
        if self.state is None:
            object.__setattr__(self, "state", singlet())
        if self.free_alice and self.n_settings > 3:
            raise DomainError("a free orthonormal Alice frame has at most 3 settings")
        if self.alice_directions is not None:
            alice = tuple(self.alice_directions)
            if len(alice) != self.n_settings:
                raise DomainError("alice_directions must match n_settings")
            object.__setattr__(self, "alice_directions", alice)
        elif self.n_settings > 3 and self.start is None:
            raise DomainError("more than three settings need explicit Alice directions")

    @property
    def fixed(self):
        return dict(self.fixed_lambdas)

    def with_fixed(self, bob, lam):
        fixed = self.fixed
        fixed[bob] = lam
        return replace(self, fixed_lambdas=tuple(fixed.items()))

    def bound(self):
        return CFFW_BOUND if self.objective.kind == CFFW else self.cjwr_limit

    def value_cap(self):
        """Largest value quantum mechanics allows for one Bob."""
        if self.objective.kind == CFFW:
            return TSIRELSON_CFFW
        return math.sqrt(self.n_settings)


def default_axes(n):
    """Alice's gauge-fixed frame: x and z for two settings, x, y, z for three."""
    if n == 2:
        return (direction_from_angles(math.pi / 2, 0.0), direction_from_angles(0.0, 0.0))
    if n == 3:
        return (
            direction_from_angles(math.pi / 2, 0.0),
            direction_from_angles(math.pi / 2, math.pi / 2),
            direction_from_angles(0.0, 0.0),
        )
    raise DomainError(f"no default axes for {n} settings")


# --- Parameter vector ---


def angles_to_vectors(angles):
    """Rows of unit vectors from a flat (theta0, phi0, theta1, phi1, ...) array."""
    pairs = np.asarray(angles, dtype=float).reshape(-1, 2)
    theta, phi = pairs[:, 0], pairs[:, 1]
    st = np.sin(theta)
    return np.column_stack((st * np.cos(phi), st * np.sin(phi), np.cos(theta)))


class ParameterLayout:
    """Maps between the flat search vector and the physical configuration."""

    def __init__(self, problem):
        self.problem = problem
        n = problem.n_settings
        chain = problem.chain_length
        self.n = n
        self.chain = chain
        self.t0 = problem.state.correlation_matrix()
        self.weights = [np.array(uniform_weights(n))] * chain
        self.fixed = problem.fixed

        if problem.alice_directions is not None:
            alice = problem.alice_directions
        elif problem.start is not None:
            alice = problem.start.alice.settings
        elif n <= 3:
            alice = default_axes(n)
        else:
            raise DomainError("more than three settings need explicit Alice directions")
        self.alice_fixed = np.array([d.vector for d in alice])
        self.handedness = 1.0
        if n == 3 and np.linalg.det(self.alice_fixed) < 0:
            self.handedness = -1.0

        if problem.bob_directions is not None:
            self.bob_fixed = np.array([d.vector for d in problem.bob_directions])
        else:
            self.bob_fixed = self.alice_fixed

        size = 0
        self.alice_slice = None
        if problem.free_alice:
            self.alice_slice = slice(0, 3)
            size = 3
        self.bob_slices = []
        for _ in range(chain):
            if problem.free_bob_angles:
                self.bob_slices.append(slice(size, size + 2 * n))
                size += 2 * n
            else:
                self.bob_slices.append(None)
        self.lambda_index = {}
        for bob in range(1, chain + 1):
            if bob not in self.fixed:
                self.lambda_index[bob] = size
                size += 1
        self.size = size

    # -- decoding --

    def alice_vectors(self, x):
        if self.alice_slice is None:
            return self.alice_fixed
        frame = Rotation.from_euler("zyz", x[self.alice_slice]).as_matrix()
        vectors = frame[:, : self.n].T.copy()
        if self.n == 3:
            vectors[2] *= self.handedness
        return vectors

    def bob_vectors(self, x):
        return [
            self.bob_fixed if s is None else angles_to_vectors(x[s])
            for s in self.bob_slices
        ]

    def sharpness(self, x):
        lams = []
        for bob in range(1, self.chain + 1):
            if bob in self.fixed:
                lams.append(self.fixed[bob])
            else:
                lam = float(x[self.lambda_index[bob]])
                lams.append(min(max(lam, LAMBDA_MIN), LAMBDA_MAX))
        return lams

    def tables(self, x):
        return chain_tables(
            self.t0,
            self.alice_vectors(x),
            self.bob_vectors(x),
            self.sharpness(x),
            self.weights,
        )

    def values(self, x):
        """Objective-kind functional value for every Bob in the chain."""
        functional = cffw_value if self.problem.objective.kind == CFFW else cjwr_value
        return [functional(t) for t in self.tables(x)]

    def residuals(self, values):
        out = []
        for c in self.problem.constraints:
            value = values[c.bob - 1]
            if c.kind == EQ:
                out.append(value - c.target)
            else:
                out.append(max(0.0, self.problem.bound() - value))
        return out

    def scenario(self, x):
        alice = AliceConfig(tuple(direction_from_vector(v) for v in self.alice_vectors(x)))
        bobs = []
        for vectors, lam in zip(self.bob_vectors(x), self.sharpness(x)):
            bobs.append(BobConfig(tuple(direction_from_vector(v) for v in vectors), lam))
        return Scenario(alice, tuple(bobs), self.problem.state)

    # -- encoding --

    def bounds(self):
        out = [(None, None)] * self.size
        for index in self.lambda_index.values():
            out[index] = (LAMBDA_MIN, LAMBDA_MAX)
        return out

    def encode(self, scenario):
        if scenario.n_settings != self.n or scenario.chain_length != self.chain:
            raise DomainError("warm start does not match the problem's shape")
        x = np.zeros(self.size)
        if self.alice_slice is not None:
            vectors = scenario.alice.vectors()
            if self.n == 2:
                frame = np.column_stack((vectors[0], vectors[1], np.cross(vectors[0], vectors[1])))
            else:
                frame = vectors.T.copy()
                frame[:, 2] *= self.handedness
            x[self.alice_slice] = Rotation.from_matrix(frame).as_euler("zyz")
        for bob, s in zip(scenario.bobs, self.bob_slices):
            if s is not None:
                x[s] = np.ravel([d.as_pair() for d in bob.settings])
        for index, bob in enumerate(scenario.bobs, start=1):
            if index in self.lambda_index:
                x[self.lambda_index[index]] = min(max(bob.sharpness, LAMBDA_MIN), LAMBDA_MAX)
        return x

    def random_point(self, rng):
        x = np.empty(self.size)
        if self.alice_slice is not None:
            x[self.alice_slice] = Rotation.random(random_state=rng).as_euler("zyz")
        for s in self.bob_slices:
            if s is not None:
                theta = np.arccos(rng.uniform(-1.0, 1.0, self.n))
                phi = rng.uniform(0.0, 2.0 * math.pi, self.n)
                x[s] = np.column_stack((theta, phi)).ravel()
        for index in self.lambda_index.values():
            x[index] = rng.uniform(0.5, LAMBDA_MAX)
        return x

    def aligned_point(self):
        """Every Bob along Alice's directions; constrained sharpness solved in order."""
        x = np.zeros(self.size)
        if self.alice_slice is not None:
            x[self.alice_slice] = 0.0
        alice = self.alice_vectors(x)
        for s in self.bob_slices:
            if s is not None:
                x[s] = np.ravel([direction_from_vector(v).as_pair() for v in alice])
        for index in self.lambda_index.values():
            x[index] = 0.7
        targets = {c.bob: c.target for c in self.problem.constraints if c.kind == EQ}
        for bob in sorted(targets):
            if bob not in self.lambda_index:
                continue
            index = self.lambda_index[bob]
            x[index] = LAMBDA_MAX
            # tables are linear in the Bob's own sharpness
            unit = self.values(x)[bob - 1]
            if unit > 0:
                x[index] = min(max(targets[bob] / unit, LAMBDA_MIN), LAMBDA_MAX)
        return x

    def initial_simplex(self, x0):
        sim = np.tile(x0, (self.size + 1, 1))
        lambda_slots = set(self.lambda_index.values())
        for i in range(self.size):
            if i in lambda_slots:
                step = LAMBDA_STEP if x0[i] + LAMBDA_STEP <= LAMBDA_MAX else -LAMBDA_STEP
            else:
                step = ANGLE_STEP
            sim[i + 1, i] += step
        return sim


# --- Search ---


class PenalizedObjective:
    """Negated target value plus weight * sum of squared constraint residuals."""

    def __init__(self, layout, weight):
        self.layout = layout
        self.weight = weight
        self.evaluations = 0

    def __call__(self, x):
        self.evaluations += 1
        values = self.layout.values(x)
        residuals = self.layout.residuals(values)
        penalty = sum(r * r for r in residuals)
        return -values[self.layout.problem.objective.bob - 1] + self.weight * penalty


@dataclass
class RestartOutcome:
    index: int
    x: np.ndarray
    value: float
    residuals: list
    evaluations: int

    @property
    def feasible(self):
        return _worst_residual(self.residuals) < FEASIBILITY_TOL


def local_search(layout, x0, iterations):
    """One penalty schedule of Nelder-Mead runs from x0; returns (x, evaluations)."""
    x = np.asarray(x0, dtype=float)
    evaluations = 0
    if layout.size == 0:
        return x, 0
    weights = PENALTY_WEIGHTS if layout.problem.constraints else PENALTY_WEIGHTS[:1]
    for weight in weights:
        objective = PenalizedObjective(layout, weight)
        result = minimize(
            objective,
            x,
            method="Nelder-Mead",
            bounds=layout.bounds(),
            options={
                "maxiter": iterations,
                "xatol": SIMPLEX_TOL,
                "fatol": SIMPLEX_TOL,
                "adaptive": layout.size > 4,
                "initial_simplex": layout.initial_simplex(x),
            },
        )
        x = result.x
        evaluations += objective.evaluations
        if not result.success:
            logger.debug("penalty weight %.0e stopped: %s", weight, result.message)
    return x, evaluations


def _run_restart(job):
    problem, index, x0, iterations = job
    layout = ParameterLayout(problem)
    x, evaluations = local_search(layout, x0, iterations)
    values = layout.values(x)
    return RestartOutcome(
        index,
        x,
        values[problem.objective.bob - 1],
        layout.residuals(values),
        evaluations,
    )


def starting_points(layout, restarts, seed):
    """Deterministic start per restart, independent of how restarts are scheduled."""
    problem = layout.problem
    first = layout.encode(problem.start) if problem.start is not None else layout.aligned_point()
    points = [first]
    children = np.random.SeedSequence(seed).spawn(restarts)
    for child in children[1:]:
        points.append(layout.random_point(np.random.default_rng(child)))
    return points


@dataclass
class OptimizationResult:
    best_value: float
    argmax: Scenario
    residuals: list
    restarts: int
    evaluations: int
    converged: bool
    values: list = field(default_factory=list)


def _worst_residual(residuals):
    return max((abs(r) for r in residuals), default=0.0)


def _check_targets(problem):
    cap = problem.value_cap()
    for c in problem.constraints:
        if c.kind == EQ and (c.target > cap + FEASIBILITY_TOL or c.target < 0.0):
            raise InfeasibleError(
                f"Bob {c.bob} cannot reach {c.target}: values lie in [0, {cap:.6f}]",
                residuals=[c.target - cap],
            )


def maximize(problem, budget=None, seed=DEFAULT_SEED, workers=1):
    """Maximize the objective Bob's value subject to the problem's constraints.

    Raises:
        InfeasibleError: no restart met every constraint within FEASIBILITY_TOL.
    """
    budget = budget or Budget()
    _check_targets(problem)
    layout = ParameterLayout(problem)
    points = starting_points(layout, budget.restarts, seed)
    jobs = [(problem, i, x0, budget.iterations) for i, x0 in enumerate(points)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_restart, jobs))
    else:
        outcomes = [_run_restart(job) for job in jobs]

    for outcome in outcomes:
        logger.debug(
            "restart %d: value %.6f, max residual %.2e",
            outcome.index,
            outcome.value,
            _worst_residual(outcome.residuals),
        )
    evaluations = sum(o.evaluations for o in outcomes)
    feasible = [o for o in outcomes if o.feasible]
    if feasible:
        # ties resolve to the lowest restart index
        best = max(feasible, key=lambda o: (o.value, -o.index))
    else:
        best = min(outcomes, key=lambda o: (_worst_residual(o.residuals), o.index))

    result = OptimizationResult(
        best_value=best.value,
        argmax=layout.scenario(best.x),
        residuals=best.residuals,
        restarts=len(outcomes),
        evaluations=evaluations,
        converged=bool(feasible),
        values=layout.values(best.x),
    )
    if not feasible:
        raise InfeasibleError(
            "no restart satisfied the constraints", residuals=best.residuals, best=result
        )
    logger.info(
        "maximized %s of Bob %d: %.6f (%d restarts, %d evaluations)",
        problem.objective.kind,
        problem.objective.bob,
        result.best_value,
        result.restarts,
        result.evaluations,
    )
    return result


# --- Sweeps ---


@dataclass(frozen=True)
class SweepPoint:
    lam: float
    values: tuple
    violated: tuple


@dataclass
class SweepResult:
    which: int
    tracked: tuple
    points: list

    @property
    def region(self):
        """Grid values where every tracked Bob violates, in grid order."""
        return [
            p.lam
            for p in self.points
            if all(p.violated[b - 1] for b in self.tracked)
        ]

    @property
    def interval(self):
        region = self.region
        if not region:
            return None
        return min(region), max(region)


def _stage_value(kind, lam, alice, t, vectors):
    table = lam * alice @ t @ vectors.T
    return cffw_value(table) if kind == CFFW else cjwr_value(table)


def best_response(problem, alice, t, lam, budget, seed):
    """Directions maximizing one Bob's own value given the correlation matrix he sees."""
    kind = problem.objective.kind
    n = problem.n_settings
    if not problem.free_bob_angles:
        fixed = np.array([d.vector for d in problem.bob_directions]) if (
            problem.bob_directions is not None
        ) else alice
        return fixed, _stage_value(kind, lam, alice, t, fixed)

    def negated(x):
        return -_stage_value(kind, lam, alice, t, angles_to_vectors(x))

    aligned = np.ravel([direction_from_vector(v).as_pair() for v in alice])
    starts = [aligned]
    for child in np.random.SeedSequence(seed).spawn(budget.restarts)[1:]:
        rng = np.random.default_rng(child)
        theta = np.arccos(rng.uniform(-1.0, 1.0, n))
        phi = rng.uniform(0.0, 2.0 * math.pi, n)
        starts.append(np.column_stack((theta, phi)).ravel())
    best_x, best_value = None, -math.inf
    for x0 in starts:
        sim = np.tile(x0, (2 * n + 1, 1)) + np.vstack((np.zeros(2 * n), ANGLE_STEP * np.eye(2 * n)))
        result = minimize(
            negated,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": budget.iterations,
                "xatol": SIMPLEX_TOL,
                "fatol": SIMPLEX_TOL,
                "initial_simplex": sim,
            },
        )
        if -result.fun > best_value + 1e-12:
            best_x, best_value = result.x, -result.fun
    return angles_to_vectors(best_x), best_value


def chain_best_responses(problem, lambdas, budget, seed):
    """Each Bob in chain order picks the settings maximizing his own value.

    Returns (values, bob_vectors).
    """
    layout = ParameterLayout(problem)
    alice = layout.alice_fixed
    t = layout.t0
    values, vectors = [], []
    for bob, lam in enumerate(lambdas, start=1):
        best, value = best_response(problem, alice, t, lam, budget, seed + bob)
        values.append(value)
        vectors.append(best)
        weights = np.array(uniform_weights(problem.n_settings))
        t = decohere_matrix(t, math.sqrt(1.0 - lam * lam), setting_projector(best, weights))
    return values, vectors


def sweep_lambda(problem, which, grid, budget=None, seed=DEFAULT_SEED, tracked=None):
    """Hold Bob `which` at each grid sharpness and report every Bob's best value.

    Every other Bob's sharpness must be fixed by the problem. Settings are
    chosen greedily along the chain (see chain_best_responses); tracked Bobs
    default to `which` and everyone after him. Only the objective kind is
    used, so problems with constraints or a free Alice frame are rejected.
    Alice's directions come from the problem (or its start scenario).

    Raises:
        DomainError: empty or out-of-range grid, unfixed sharpness, constraints
            or a free Alice frame.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise DomainError("sweep grid is empty")
    if any(not 0.0 < g <= 1.0 for g in grid):
        raise DomainError("sweep grid values must lie in (0, 1]")
    if not 1 <= which <= problem.chain_length:
        raise DomainError(f"swept Bob {which} outside the chain")
    missing = [
        b for b in range(1, problem.chain_length + 1)
        if b != which and b not in problem.fixed
    ]
    if missing:
        raise DomainError(f"sweep needs fixed sharpness for Bobs {missing}")
    if problem.constraints:
        raise DomainError(
            "sweeps pick each Bob's best response and cannot hold steering "
            "constraints; drop them or use maximize"
        )
    if problem.free_alice:
        raise DomainError("sweeps hold Alice's directions fixed")
    budget = budget or Budget(restarts=8, iterations=DEFAULT_ITERATIONS)
    tracked = tuple(tracked or range(which, problem.chain_length + 1))
    bound = problem.bound()
    points = []
    for lam in grid:
        fixed = problem.with_fixed(which, lam).fixed
        lambdas = [fixed[b] for b in range(1, problem.chain_length + 1)]
        values, _ = chain_best_responses(problem, lambdas, budget, seed)
        violated = tuple(v > bound + 1e-12 for v in values)
        points.append(SweepPoint(lam, tuple(values), violated))
        logger.info(
            "sweep Bob %d at %.4f: %s",
            which,
            lam,
            ", ".join(f"{v:.4f}" for v in values),
        )
    return SweepResult(which, tracked, points)


def lambda_grid(start, stop, step):
    """Inclusive grid start, start + step, ..., stop rounded to the step's decimals."""
    if step <= 0:
        raise DomainError("grid step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    decimals = max(0, -int(math.floor(math.log10(step))) + 1)
    return [round(start + i * step, decimals) for i in range(count)]


# --- Conjecture exploration ---


PHI = (1.0 + math.sqrt(5.0)) / 2.0


def _unique_axes(vertices):
    """Keep one vertex of every antipodal pair, normalized."""
    axes = []
    for v in vertices:
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        if not any(abs(abs(float(v @ a)) - 1.0) < 1e-9 for a in axes):
            axes.append(v)
    return axes


def platonic_axes(n):
    """Measurement axes through the vertices of a Platonic solid.

    4: cube, 6: icosahedron, 10: dodecahedron.
    """
    signs = (1.0, -1.0)
    if n == 4:
        vertices = [(a, b, c) for a in signs for b in signs for c in signs]
    elif n == 6:
        vertices = []
        for a in signs:
            for b in signs:
                vertices += [(0, a, b * PHI), (a, b * PHI, 0), (b * PHI, 0, a)]
    elif n == 10:
        vertices = [(a, b, c) for a in signs for b in signs for c in signs]
        for a in signs:
            for b in signs:
                vertices += [
                    (0, a / PHI, b * PHI),
                    (a / PHI, b * PHI, 0),
                    (b * PHI, 0, a / PHI),
                ]
    else:
        raise DomainError(f"no Platonic direction set with {n} axes (use 4, 6 or 10)")
    axes = _unique_axes(vertices)
    return tuple(direction_from_vector(a) for a in axes)


GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def spread_axes(n):
    """n distinct axes spread over the upper hemisphere on a Fibonacci lattice.

    All heights are positive, so no two axes are antipodal.
    """
    if n < 2:
        raise DomainError(f"need at least two axes, got {n}")
    axes = []
    for i in range(n):
        z = 1.0 - (i + 0.5) / n
        r = math.sqrt(1.0 - z * z)
        phi = i * GOLDEN_ANGLE
        axes.append(direction_from_vector((r * math.cos(phi), r * math.sin(phi), z)))
    return tuple(axes)


FREE = "free"
PLATONIC = "platonic"


@dataclass
class ConjectureTable:
    """Per-Bob CJWR values at the best configuration found.

    feasible is False when some earlier Bob could not even reach the bound;
    values then belong to the closest configuration found.
    """

    n_settings: int
    chain_length: int
    family: str
    bound: float
    values: list
    result: OptimizationResult
    feasible: bool = True

    @property
    def steering_bobs(self):
        return [i for i, v in enumerate(self.values, start=1) if v > self.bound + 1e-12]


def conjecture_problem(n_settings, chain_length, family=FREE):
    """CJWR problem with every earlier Bob held at the classical bound.

    Platonic family: Alice and every Bob measure along the solid's axes.
    Free family: Bob's directions are searched; Alice uses the orthonormal
    axes for up to three settings and spread_axes beyond that. The bound is
    computed from Alice's directions whenever they are not orthonormal.
    """
    if n_settings < 2:
        raise DomainError(f"need at least two settings, got {n_settings}")
    if family not in (FREE, PLATONIC):
        raise DomainError(f"direction family must be free or platonic, got {family!r}")
    alice = None
    bound = CJWR_BOUND
    if family == PLATONIC:
        alice = platonic_axes(n_settings)
    elif n_settings > 3:
        alice = spread_axes(n_settings)
    if alice is not None:
        bound = cjwr_bound([d.vector for d in alice])
    return OptimizationProblem(
        n_settings=n_settings,
        chain_length=chain_length,
        objective=Objective(CJWR, chain_length),
        constraints=tuple(Constraint(b, EQ, bound) for b in range(1, chain_length)),
        fixed_lambdas=((chain_length, 1.0),),
        free_bob_angles=family == FREE,
        alice_directions=alice,
        cjwr_limit=bound,
    )


def conjecture_probe(n_settings, chain_length, family=FREE, budget=None, seed=DEFAULT_SEED,
                     workers=1):
    """Largest last-Bob CJWR value when every earlier Bob sits at the classical bound."""
    problem = conjecture_problem(n_settings, chain_length, family)
    try:
        result = maximize(problem, budget, seed, workers)
    except InfeasibleError as exc:
        if exc.best is None:
            raise
        logger.warning("conjecture probe n=%d chain=%d: %s", n_settings, chain_length, exc)
        return ConjectureTable(
            n_settings, chain_length, family, problem.cjwr_limit, exc.best.values,
            exc.best, feasible=False,
        )
    return ConjectureTable(
        n_settings, chain_length, family, problem.cjwr_limit, result.values, result
    )
