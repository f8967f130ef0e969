"""Config parsing and result serialization.

Scenario and problem files are YAML (JSON also parses). Results are emitted
as JSON text or CSV tables.
"""

import csv
import json

import numpy as np
import yaml

from .constants import (
    ANGLE_DIGITS,
    DEFAULT_ITERATIONS,
    DEFAULT_RESTARTS,
    DEFAULT_SEED,
    PROBABILITY_DIGITS,
)
from .model import (
    AliceConfig,
    BobConfig,
    ConfigError,
    DomainError,
    InvariantError,
    Scenario,
    direction_from_angles,
)

# Result format names
FORMAT_CSV = "csv"
FORMAT_JSON = "json-text"
FORMATS = (FORMAT_CSV, FORMAT_JSON)


def _round(value, digits=ANGLE_DIGITS):
    return float(f"{value:.{digits}g}")


def _fmt(value):
    return f"{value:.{PROBABILITY_DIGITS}g}"


# --- Loading ---


def load_document(text):
    """Parse YAML text into a mapping, reporting the line of any syntax error."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"malformed config: {problem}", line=line) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    return data


def load_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return load_document(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None


def _number(value, field):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=field)
    return float(value)


def _integer(value, field):
    whole = isinstance(value, int) or (isinstance(value, float) and value.is_integer())
    if isinstance(value, bool) or not whole:
        raise ConfigError(f"expected an integer, got {value!r}", field=field)
    return int(value)


def _mapping(value, field):
    if not isinstance(value, dict):
        raise ConfigError(f"expected a mapping, got {value!r}", field=field)
    return value


def _require(data, key, field):
    if key not in data:
        raise ConfigError(f"missing required key {key!r}", field=field or None)
    return data[key]


def _list(value, field):
    if not isinstance(value, list):
        raise ConfigError(f"expected a list, got {value!r}", field=field)
    return value


def deserialize_direction(pair, field):
    pair = _list(pair, field)
    if len(pair) != 2:
        raise ConfigError("a direction is [theta, phi]", field=field)
    theta = _number(pair[0], f"{field}[0]")
    phi = _number(pair[1], f"{field}[1]")
    try:
        return direction_from_angles(theta, phi)
    except DomainError as exc:
        raise ConfigError(str(exc), field=field) from None


def deserialize_state(value, field="state"):
    """'singlet', or 16 [re, im] pairs of a 4x4 matrix in row-major order."""
    from .density import TwoQubitState, singlet

    if value is None or value == "singlet":
        return singlet()
    entries = _list(value, field)
    if len(entries) != 16:
        raise ConfigError(f"state needs 16 (re, im) pairs, got {len(entries)}", field=field)
    values = []
    for i, pair in enumerate(entries):
        pair = _list(pair, f"{field}[{i}]")
        if len(pair) != 2:
            raise ConfigError("matrix entries are [re, im] pairs", field=f"{field}[{i}]")
        re = _number(pair[0], f"{field}[{i}][0]")
        im = _number(pair[1], f"{field}[{i}][1]")
        values.append(complex(re, im))
    return TwoQubitState(np.array(values).reshape(4, 4))


def deserialize_scenario(data):
    state = deserialize_state(data.get("state"))
    alice_data = _require(data, "alice", "")
    if not isinstance(alice_data, dict):
        raise ConfigError("alice must be a mapping", field="alice")
    settings = _list(_require(alice_data, "settings", "alice"), "alice.settings")
    alice = AliceConfig(
        tuple(deserialize_direction(p, f"alice.settings[{i}]") for i, p in enumerate(settings))
    )
    bobs = []
    for k, bob in enumerate(_list(_require(data, "bobs", ""), "bobs")):
        field = f"bobs[{k}]"
        if not isinstance(bob, dict):
            raise ConfigError("each Bob is a mapping", field=field)
        dirs = _list(_require(bob, "settings", field), f"{field}.settings")
        lam = _number(_require(bob, "lambda", field), f"{field}.lambda")
        if not 0.0 < lam <= 1.0:
            raise ConfigError(f"lambda must lie in (0, 1], got {lam}", field=f"{field}.lambda")
        bobs.append(
            BobConfig(
                tuple(
                    deserialize_direction(p, f"{field}.settings[{i}]")
                    for i, p in enumerate(dirs)
                ),
                lam,
            )
        )
    weights = data.get("weights")
    if weights is not None:
        weights = tuple(
            tuple(_number(w, f"weights[{k}][{i}]") for i, w in enumerate(_list(row, f"weights[{k}]")))
            for k, row in enumerate(_list(weights, "weights"))
        )
    return Scenario(alice, tuple(bobs), state, weights)


def deserialize_problem(data):
    """Build (problem, budget, seed) from a problem config mapping."""
    from .optimizer import (
        Budget,
        Constraint,
        Objective,
        OptimizationProblem,
    )

    objective_data = _mapping(_require(data, "objective", ""), "objective")
    try:
        objective = Objective(
            str(_require(objective_data, "kind", "objective")),
            _integer(_require(objective_data, "bob", "objective"), "objective.bob"),
        )
    except DomainError as exc:
        raise ConfigError(str(exc), field="objective") from None

    start = deserialize_scenario(data) if "bobs" in data else None
    if start is not None:
        n_settings, chain = start.n_settings, start.chain_length
    else:
        n_settings = _integer(_require(data, "n_settings", ""), "n_settings")
        chain = _integer(_require(data, "chain_length", ""), "chain_length")

    constraints = []
    for i, c in enumerate(_list(data.get("constraints", []), "constraints")):
        field = f"constraints[{i}]"
        if not isinstance(c, dict):
            raise ConfigError("each constraint is a mapping", field=field)
        target = c.get("target")
        try:
            constraints.append(
                Constraint(
                    _integer(_require(c, "bob", field), f"{field}.bob"),
                    str(c.get("kind", "eq")),
                    None if target is None else _number(target, f"{field}.target"),
                )
            )
        except DomainError as exc:
            raise ConfigError(str(exc), field=field) from None

    free = [str(f) for f in _list(data.get("free", ["bob_angles", "lambdas"]), "free")]
    known = {"alice", "bob_angles", "lambdas"} | {f"lambda{k}" for k in range(1, chain + 1)}
    for i, name in enumerate(free):
        if name not in known:
            raise ConfigError(f"unknown free parameter {name!r}", field=f"free[{i}]")

    fixed = {}
    for key, value in _mapping(data.get("fixed_lambdas") or {}, "fixed_lambdas").items():
        field = f"fixed_lambdas.{key}"
        fixed[_integer(key, field)] = _number(value, field)
    for k in range(1, chain + 1):
        if "lambdas" in free or f"lambda{k}" in free or k in fixed:
            continue
        if start is None:
            raise ConfigError(f"lambda of Bob {k} is neither free nor fixed", field="free")
        fixed[k] = start.bob(k).sharpness

    budget_data = _mapping(data.get("budget") or {}, "budget")
    restarts = _integer(budget_data.get("restarts", DEFAULT_RESTARTS), "budget.restarts")
    iterations = _integer(budget_data.get("iterations", DEFAULT_ITERATIONS), "budget.iterations")
    try:
        budget = Budget(restarts, iterations)
        problem = OptimizationProblem(
            n_settings=n_settings,
            chain_length=chain,
            objective=objective,
            constraints=tuple(constraints),
            fixed_lambdas=tuple(fixed.items()),
            state=start.state if start is not None else deserialize_state(data.get("state")),
            free_alice="alice" in free,
            free_bob_angles="bob_angles" in free,
            start=start,
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    seed = _integer(data.get("seed", DEFAULT_SEED), "seed")
    return problem, budget, seed


def load_scenario(path):
    try:
        return deserialize_scenario(load_file(path))
    except InvariantError as exc:
        raise ConfigError(str(exc)) from None


def load_problem(path):
    try:
        return deserialize_problem(load_file(path))
    except InvariantError as exc:
        raise ConfigError(str(exc)) from None


# --- Serialization ---


def serialize_direction(direction):
    return [_round(direction.theta), _round(direction.phi)]


def serialize_state(state):
    if state.name == "singlet":
        return "singlet"
    return [[float(z.real), float(z.imag)] for z in np.ravel(state.matrix)]


def serialize_scenario(scenario):
    """Convert a Scenario to a config mapping that deserialize_scenario accepts."""
    return {
        "state": serialize_state(scenario.state),
        "alice": {"settings": [serialize_direction(d) for d in scenario.alice.settings]},
        "bobs": [
            {
                "settings": [serialize_direction(d) for d in bob.settings],
                "lambda": _round(bob.sharpness),
            }
            for bob in scenario.bobs
        ],
        "weights": [list(row) for row in scenario.setting_weights],
    }


def serialize_table(table):
    return {"bob": table.bob_index, "entries": table.entries.tolist()}


def serialize_evaluation(evaluation):
    return {
        "kind": evaluation.kind,
        "label": evaluation.label,
        "bob": evaluation.bob_index,
        "value": evaluation.value,
        "bound": evaluation.bound,
        "violated": evaluation.violated,
    }


def serialize_result(result):
    return {
        "best_value": result.best_value,
        "values": list(result.values),
        "residuals": list(result.residuals),
        "restarts": result.restarts,
        "evaluations": result.evaluations,
        "converged": result.converged,
        "argmax": serialize_scenario(result.argmax),
    }


def serialize_sweep(sweep):
    interval = sweep.interval
    return {
        "which": sweep.which,
        "tracked": list(sweep.tracked),
        "points": [
            {"lambda": p.lam, "values": list(p.values), "violated": list(p.violated)}
            for p in sweep.points
        ],
        "region": None if interval is None else list(interval),
    }


def serialize_conjecture(table):
    return {
        "n_settings": table.n_settings,
        "chain_length": table.chain_length,
        "family": table.family,
        "bound": table.bound,
        "values": list(table.values),
        "steering_bobs": table.steering_bobs,
        "feasible": table.feasible,
        "argmax": serialize_scenario(table.result.argmax),
    }


def serialize_verify(report):
    return {
        "passed": report.passed,
        "properties": [
            {
                "name": c.name,
                "worst": c.deviation,
                "tolerance": c.tolerance,
                "trials": c.trials,
                "lower_bound": c.minimum,
                "passed": c.passed,
            }
            for c in report.checks
        ],
    }


def serialize_outcome(outcome):
    """One reproduced experiment: observed numbers and each pinned check."""
    return {
        "name": outcome.spec.name,
        "kind": outcome.spec.kind,
        "description": outcome.spec.description,
        "passed": outcome.passed,
        "observed": dict(outcome.observed),
        "checks": [
            {"expected": e.describe(), "observed": value, "passed": ok}
            for e, value, ok in outcome.checks
        ],
    }


def encode(msg):
    """Encode a result mapping as indented JSON text."""
    return json.dumps(msg, indent=2, default=_json_default)


def decode(raw):
    return json.loads(raw)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


# --- CSV ---


def write_distribution_csv(dist, fh):
    """Columns a, b1, ..., bn, probability."""
    writer = csv.writer(fh, lineterminator="\n")
    header = ["a"] + [f"b{k}" for k in range(1, len(dist.observers))] + ["probability"]
    writer.writerow(header)
    for outcomes, p in dist.rows():
        writer.writerow(list(outcomes) + [_fmt(p)])


def write_table_csv(table, fh):
    """Rows are Alice's settings, columns the Bob's settings."""
    writer = csv.writer(fh, lineterminator="\n")
    for row in table.entries:
        writer.writerow([_fmt(v) for v in row])


def write_evaluations_csv(evaluations, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["bob", "kind", "value", "bound", "violated"])
    for e in evaluations:
        writer.writerow([e.bob_index, e.kind, _fmt(e.value), _fmt(e.bound), e.violated])


def read_table_csv(fh):
    return np.array([[float(v) for v in row] for row in csv.reader(fh) if row])


def write_sweep_csv(sweep, fh):
    """One row per grid point: lambda, then every Bob's value and violation flag."""
    writer = csv.writer(fh, lineterminator="\n")
    chain = len(sweep.points[0].values) if sweep.points else 0
    header = ["lambda"]
    header += [f"value_{k}" for k in range(1, chain + 1)]
    header += [f"violated_{k}" for k in range(1, chain + 1)]
    writer.writerow(header)
    for p in sweep.points:
        writer.writerow([_fmt(p.lam)] + [_fmt(v) for v in p.values] + list(p.violated))


def write_verify_csv(report, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["property", "worst", "tolerance", "trials", "passed"])
    for c in report.checks:
        writer.writerow([c.name, _fmt(c.deviation), _fmt(c.tolerance), c.trials, c.passed])


def write_outcomes_csv(outcomes, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["experiment", "expected", "observed", "passed"])
    for outcome in outcomes:
        for expectation, value, ok in outcome.checks:
            observed = "" if value is None else _fmt(value)
            writer.writerow([outcome.spec.name, expectation.describe(), observed, ok])
