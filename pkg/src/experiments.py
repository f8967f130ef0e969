"""Bundled scenarios and the registry of pinned reproduction experiments."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from .analytic import correlation_tables
from .constants import TSIRELSON_CFFW
from .inequalities import CFFW, CJWR, evaluate_all
from .model import (
    AliceConfig,
    BobConfig,
    DomainError,
    InfeasibleError,
    Scenario,
    direction_from_angles,
)
from .optimizer import (
    EQ,
    FREE,
    Budget,
    Constraint,
    Objective,
    OptimizationProblem,
    conjecture_probe,
    lambda_grid,
    maximize,
    sweep_lambda,
)

logger = logging.getLogger(__name__)

PI = math.pi

# Experiment kinds
RUN = "run"
OPTIMIZE = "optimize"
SWEEP = "sweep"
VERIFY = "verify"
CONJECTURE = "conjecture"
KINDS = (RUN, OPTIMIZE, SWEEP, VERIFY, CONJECTURE)


def _dirs(pairs):
    return tuple(direction_from_angles(t, p) for t, p in pairs)


# --- Bundled scenarios ---

# Alice along x and z; Bobs at 45 degrees in the x-z plane
PLANE_ALICE = ((PI / 2, 0.0), (0.0, 0.0))
PLANE_BOB = ((PI / 4, 0.0), (3 * PI / 4, 0.0))

# Three-setting frame rotated by 0.12 rad about z (angles rounded in print)
TRIAD_PHI = 0.12
TRIAD_ALICE = ((PI / 2, TRIAD_PHI), (PI, 0.0), (PI / 2, TRIAD_PHI + PI / 2))
TRIAD_FLIPPED = ((PI / 2, TRIAD_PHI + PI), (0.0, 0.0), (PI / 2, TRIAD_PHI + 3 * PI / 2))


def _plane_scenario(lambdas):
    alice = AliceConfig(_dirs(PLANE_ALICE))
    return Scenario(alice, tuple(BobConfig(_dirs(PLANE_BOB), lam) for lam in lambdas))


def two_bob_reported_settings():
    return _plane_scenario([0.74, 1.0])


def three_bob_reported_argmax():
    return _plane_scenario([0.74, 0.89, 1.0])


def sharp_singlet_chsh():
    return _plane_scenario([1.0])


def sharp_repeat_two_bobs():
    return _plane_scenario([1.0, 1.0])


def pair_steering_weak_middle():
    return _plane_scenario([0.74, 0.05, 1.0])


def triad_reported_settings():
    alice = AliceConfig(_dirs(TRIAD_ALICE))
    bobs = (
        BobConfig(_dirs(TRIAD_FLIPPED), 0.61),
        BobConfig(_dirs(TRIAD_ALICE), 0.70),
        BobConfig(_dirs(TRIAD_FLIPPED), 1.0),
    )
    return Scenario(alice, bobs)


SCENARIOS = {
    "two_bob_reported_settings": two_bob_reported_settings,
    "three_bob_reported_argmax": three_bob_reported_argmax,
    "triad_reported_settings": triad_reported_settings,
    "sharp_singlet_chsh": sharp_singlet_chsh,
    "sharp_repeat_two_bobs": sharp_repeat_two_bobs,
    "pair_steering_weak_middle": pair_steering_weak_middle,
}


def bundled_scenario(name):
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise DomainError(
            f"unknown bundled scenario {name!r}; choose from {sorted(SCENARIOS)}"
        ) from None


def scenario_report(scenario):
    """Tables and steering evaluations for every Bob of a scenario."""
    tables = correlation_tables(scenario)
    return tables, evaluate_all(tables)


def evaluation_values(evaluations):
    return {e.label: e.value for e in evaluations}


# --- Problems ---


def cffw_problem(chain_length, targets, start=None):
    """Maximize the last Bob's CFFW value with earlier Bobs pinned to targets."""
    return OptimizationProblem(
        n_settings=2,
        chain_length=chain_length,
        objective=Objective(CFFW, chain_length),
        constraints=tuple(Constraint(b, EQ, t) for b, t in enumerate(targets, start=1)),
        fixed_lambdas=((chain_length, 1.0),),
        start=start,
    )


def cjwr_problem(n_settings, chain_length, targets, start=None):
    return OptimizationProblem(
        n_settings=n_settings,
        chain_length=chain_length,
        objective=Objective(CJWR, chain_length),
        constraints=tuple(Constraint(b, EQ, t) for b, t in enumerate(targets, start=1)),
        fixed_lambdas=((chain_length, 1.0),),
        start=start,
    )


def cffw_sweep_problem():
    return OptimizationProblem(
        n_settings=2,
        chain_length=2,
        objective=Objective(CFFW, 2),
        fixed_lambdas=((2, 1.0),),
    )


def cjwr_sweep_problem(lambda1):
    return OptimizationProblem(
        n_settings=3,
        chain_length=3,
        objective=Objective(CJWR, 3),
        fixed_lambdas=((1, lambda1), (3, 1.0)),
    )


# --- Registry ---


@dataclass(frozen=True)
class Expectation:
    """A pinned number: observed ~ expected within tol, or observed below/above a limit."""

    label: str
    expected: float
    tol: float = 0.0
    relation: str = "approx"

    def check(self, observed):
        if observed is None:
            return False
        if self.relation == "approx":
            return abs(observed - self.expected) <= self.tol + 1e-12
        if self.relation == "below":
            return observed < self.expected
        if self.relation == "above":
            return observed > self.expected
        raise DomainError(f"unknown relation {self.relation!r}")

    def describe(self):
        if self.relation == "approx":
            return f"{self.label} = {self.expected} +/- {self.tol:g}"
        sign = "<" if self.relation == "below" else ">"
        return f"{self.label} {sign} {self.expected}"


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    kind: str
    payload: object
    expectations: tuple = ()
    seed: int = 0
    budget: Optional[Budget] = None
    description: str = ""
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"experiment kind must be one of {KINDS}, got {self.kind!r}")


@dataclass
class ExperimentOutcome:
    spec: ExperimentSpec
    observed: dict
    checks: list
    detail: object = None

    @property
    def passed(self):
        return all(ok for _, _, ok in self.checks)


REPRODUCTION_BUDGET = Budget(restarts=16, iterations=2000)
SWEEP_BUDGET = Budget(restarts=4, iterations=2000)

CFFW_SWEEP_GRID = lambda_grid(0.70, 0.92, 0.01)
CJWR_SWEEP_GRID = lambda_grid(0.60, 0.92, 0.01)

EXPERIMENTS = (
    ExperimentSpec(
        "two_bob_reported_settings",
        RUN,
        "two_bob_reported_settings",
        (Expectation("S_1", 2.10, 0.01), Expectation("S_2", 2.36, 0.01)),
        description="Two Bobs at the reported settings, lambda1 = 0.74",
    ),
    ExperimentSpec(
        "sharp_singlet_chsh",
        RUN,
        "sharp_singlet_chsh",
        (Expectation("S_1", TSIRELSON_CFFW, 1e-9),),
        description="One sharp Bob at the Tsirelson geometry",
    ),
    ExperimentSpec(
        "three_bob_reported_argmax",
        RUN,
        "three_bob_reported_argmax",
        (
            Expectation("S_1", 2.10, 0.01),
            Expectation("S_2", 2.10, 0.01),
            Expectation("S_3", 1.72, 0.01),
        ),
        description="Three Bobs at the reported argmax, lambda = (0.74, 0.89, 1)",
    ),
    ExperimentSpec(
        "triad_reported_settings",
        RUN,
        "triad_reported_settings",
        (
            Expectation("F^3_1", 1.05, 0.01),
            Expectation("F^3_2", 1.05, 0.01),
            Expectation("F^3_3", 1.21, 0.01),
        ),
        description="Three settings, three Bobs at the reported settings",
    ),
    ExperimentSpec(
        "pair_steering_weak_middle",
        RUN,
        "pair_steering_weak_middle",
        (Expectation("S_1", 2.0, relation="above"), Expectation("S_3", 2.0, relation="above")),
        description="First and third Bob both steer when the middle Bob barely measures",
    ),
    ExperimentSpec(
        "baseline_cffw_one_bob",
        OPTIMIZE,
        cffw_problem(1, ()),
        (Expectation("best", TSIRELSON_CFFW, 1e-6),),
        budget=Budget(4, 2000),
        description="Single sharp Bob, CFFW",
    ),
    ExperimentSpec(
        "baseline_cjwr3_one_bob",
        CONJECTURE,
        (3, 1, FREE),
        (Expectation("F_1", math.sqrt(3.0), 1e-6),),
        budget=Budget(4, 2000),
        description="Single sharp Bob, three-setting CJWR",
    ),
    ExperimentSpec(
        "cffw_two_bobs",
        OPTIMIZE,
        cffw_problem(2, (2.10,)),
        (Expectation("best", 2.36, 0.02),),
        budget=REPRODUCTION_BUDGET,
        description="max S_2 with S_1 = 2.10 and lambda2 = 1",
    ),
    ExperimentSpec(
        "cffw_two_bobs_lambda_window",
        SWEEP,
        (cffw_sweep_problem(), 1, CFFW_SWEEP_GRID),
        (Expectation("region_low", 0.71, 0.01), Expectation("region_high", 0.91, 0.01)),
        budget=SWEEP_BUDGET,
        description="lambda1 window where both Bobs violate CFFW",
    ),
    ExperimentSpec(
        "cffw_three_bobs_5pct",
        OPTIMIZE,
        cffw_problem(3, (2.10, 2.10)),
        (Expectation("best", 1.72, 0.02), Expectation("best", 2.0, relation="below")),
        budget=REPRODUCTION_BUDGET,
        description="max S_3 with S_1 = S_2 = 2.10",
    ),
    ExperimentSpec(
        "cffw_three_bobs_bound",
        OPTIMIZE,
        cffw_problem(3, (2.0, 2.0)),
        (Expectation("best", 1.88, 0.02), Expectation("best", 2.0, relation="below")),
        budget=REPRODUCTION_BUDGET,
        description="max S_3 with S_1 = S_2 = 2",
    ),
    ExperimentSpec(
        "cjwr3_three_bobs",
        OPTIMIZE,
        cjwr_problem(3, 3, (1.05, 1.05)),
        (Expectation("best", 1.21, 0.02),),
        budget=REPRODUCTION_BUDGET,
        description="max F^3_3 with F^3_1 = F^3_2 = 1.05",
    ),
    ExperimentSpec(
        "cjwr3_lambda2_window_058",
        SWEEP,
        (cjwr_sweep_problem(0.58), 2, CJWR_SWEEP_GRID),
        (Expectation("region_low", 0.66, 0.01), Expectation("region_high", 0.86, 0.01)),
        budget=SWEEP_BUDGET,
        description="lambda2 window at lambda1 = 0.58",
    ),
    ExperimentSpec(
        "cjwr3_lambda2_window_064",
        SWEEP,
        (cjwr_sweep_problem(0.64), 2, CJWR_SWEEP_GRID),
        (Expectation("region_low", 0.68, 0.01), Expectation("region_high", 0.84, 0.01)),
        budget=SWEEP_BUDGET,
        description="lambda2 window at lambda1 = 0.64",
    ),
    ExperimentSpec(
        "cjwr3_four_bobs",
        CONJECTURE,
        (3, 4, FREE),
        (Expectation("F_4", 0.94, 0.02), Expectation("F_4", 1.0, relation="below")),
        budget=REPRODUCTION_BUDGET,
        description="max F^3_4 with three earlier Bobs at the bound",
    ),
    ExperimentSpec(
        "cjwr2_three_bobs",
        CONJECTURE,
        (2, 3, FREE),
        (Expectation("F_3", 1.0, relation="below"),),
        budget=REPRODUCTION_BUDGET,
        description="Two-setting CJWR is shared by at most two Bobs",
    ),
    ExperimentSpec(
        "verify",
        VERIFY,
        None,
        (Expectation("failures", 0.0, 0.0),),
        description="Cross-engine property suite",
        options={"trials": 200},
    ),
)


def experiment(name):
    for spec in EXPERIMENTS:
        if spec.name == name:
            return spec
    raise DomainError(f"unknown experiment {name!r}")


def check_unique(specs):
    names = [s.name for s in specs]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise DomainError(f"experiment names must be unique, repeated: {duplicates}")


# --- Execution ---


def _observe_run(spec):
    scenario = spec.payload if isinstance(spec.payload, Scenario) else bundled_scenario(spec.payload)
    tables, evaluations = scenario_report(scenario)
    return evaluation_values(evaluations), (tables, evaluations)


def _observe_optimize(spec, budget, seed):
    try:
        result = maximize(spec.payload, budget, seed)
    except InfeasibleError as exc:
        logger.warning("%s: %s", spec.name, exc)
        return {"best": None}, exc.best
    observed = {"best": result.best_value}
    observed.update({f"value_{k}": v for k, v in enumerate(result.values, start=1)})
    return observed, result


def _observe_sweep(spec, budget, seed):
    problem, which, grid = spec.payload
    sweep = sweep_lambda(problem, which, grid, budget, seed)
    interval = sweep.interval
    observed = {
        "region_low": interval[0] if interval else None,
        "region_high": interval[1] if interval else None,
    }
    return observed, sweep


def _observe_conjecture(spec, budget, seed):
    n, chain, family = spec.payload
    table = conjecture_probe(n, chain, family, budget, seed)
    observed = {f"F_{k}": v for k, v in enumerate(table.values, start=1)}
    return observed, table


def _observe_verify(spec, seed):
    from .verify import run_suite

    report = run_suite(trials=spec.options.get("trials", 200), seed=seed)
    return {"failures": float(len(report.failures))}, report


def run_experiment(spec, budget=None, seed=None):
    """Execute one registry entry and check its pinned expectations."""
    budget = budget or spec.budget
    seed = spec.seed if seed is None else seed
    logger.info("experiment %s (%s)", spec.name, spec.kind)
    if spec.kind == RUN:
        observed, detail = _observe_run(spec)
    elif spec.kind == OPTIMIZE:
        observed, detail = _observe_optimize(spec, budget, seed)
    elif spec.kind == SWEEP:
        observed, detail = _observe_sweep(spec, budget, seed)
    elif spec.kind == CONJECTURE:
        observed, detail = _observe_conjecture(spec, budget, seed)
    else:
        observed, detail = _observe_verify(spec, seed)
    checks = []
    for expectation in spec.expectations:
        value = observed.get(expectation.label)
        ok = expectation.check(value)
        checks.append((expectation, value, ok))
        if not ok:
            logger.warning(
                "%s: expected %s, observed %s", spec.name, expectation.describe(), value
            )
    return ExperimentOutcome(spec, observed, checks, detail)


def reproduce_all(names=None, budget=None, seed=None):
    specs = EXPERIMENTS if names is None else tuple(experiment(n) for n in names)
    check_unique(specs)
    return [run_experiment(spec, budget, seed) for spec in specs]
