"""Domain types shared by every engine: directions, settings, observers, scenarios."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constants import (
    ORTHOGONALITY_TOL,
    TWO_PI,
    UNIT_NORM_TOL,
    WEIGHT_SUM_TOL,
)


# --- Errors ---


class SteeringError(Exception):
    """Base class for every error raised by the simulator."""


class DomainError(SteeringError, ValueError):
    """An argument lies outside the domain of an operation."""


class InvariantError(SteeringError, ValueError):
    """A constructed value breaks one of its type invariants."""

    def __init__(self, invariant, detail=""):
        self.invariant = invariant
        message = f"invariant violated: {invariant}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class ConfigError(SteeringError, ValueError):
    """A config file could not be parsed or holds an invalid field."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        if where:
            message = f"{message} [{', '.join(where)}]"
        super().__init__(message)


class InfeasibleError(SteeringError):
    """Optimizer constraints could not be met within tolerance."""

    def __init__(self, message, residuals=(), best=None):
        self.residuals = list(residuals)
        self.best = best
        super().__init__(message)


# --- Directions ---


@dataclass(frozen=True)
class Direction:
    """A unit vector in R^3 given by polar angle theta and azimuth phi (radians)."""

    theta: float
    phi: float

    @property
    def vector(self):
        st = math.sin(self.theta)
        return np.array(
            [st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)]
        )

    def dot(self, other):
        return float(self.vector @ other.vector)

    def as_pair(self):
        return [self.theta, self.phi]


def direction_from_angles(theta, phi):
    """Build a canonical Direction from arbitrary finite angles.

    theta is folded into [0, pi] (shifting phi by pi when it crosses a pole),
    phi is reduced into [0, 2pi), and phi is set to 0 at either pole.
    """
    theta = float(theta)
    phi = float(phi)
    if not (math.isfinite(theta) and math.isfinite(phi)):
        raise DomainError(f"angles must be finite, got theta={theta}, phi={phi}")
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    if theta > math.pi:
        theta = TWO_PI - theta
        phi += math.pi
    phi = math.fmod(phi, TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    if theta == 0.0 or theta == math.pi:
        phi = 0.0
    return Direction(theta, phi)


def direction_from_vector(vector):
    """Build a canonical Direction pointing along a nonzero vector."""
    v = np.asarray(vector, dtype=float)
    norm = float(np.linalg.norm(v))
    if v.shape != (3,) or not math.isfinite(norm) or norm == 0.0:
        raise DomainError(f"cannot build a direction from {vector!r}")
    x, y, z = v / norm
    # atan2 keeps full precision near the poles, unlike arccos
    theta = math.atan2(math.hypot(x, y), z)
    phi = math.atan2(y, x)
    return direction_from_angles(theta, phi)


# --- Sharpness ---


def check_sharpness(lam):
    lam = float(lam)
    if not (0.0 < lam <= 1.0):
        raise DomainError(f"sharpness must lie in (0, 1], got {lam}")
    return lam


def weak_equivalents(lam):
    """Return (F, G) = (sqrt(1 - lam^2), lam) for an optimal pointer of sharpness lam."""
    lam = check_sharpness(lam)
    return math.sqrt(1.0 - lam * lam), lam


@dataclass(frozen=True)
class UnsharpSetting:
    direction: Direction
    sharpness: float

    def __post_init__(self):
        check_sharpness(self.sharpness)

    @property
    def quality_factor(self):
        return weak_equivalents(self.sharpness)[0]

    @property
    def precision(self):
        return self.sharpness


# --- Observers ---


def gram_matrix(directions):
    vectors = np.array([d.vector for d in directions])
    return vectors @ vectors.T


@dataclass(frozen=True)
class AliceConfig:
    """Alice's measurement directions (the steered party).

    Up to three settings must be mutually orthogonal. Larger sets cannot be
    orthogonal in R^3; they are only required to be distinct axes, and the
    caller supplies a suitable direction family (e.g. Platonic axes).
    """

    settings: tuple

    def __post_init__(self):
        settings = tuple(self.settings)
        object.__setattr__(self, "settings", settings)
        if len(settings) < 2:
            raise InvariantError("Alice has at least two settings", f"got {len(settings)}")
        gram = gram_matrix(settings)
        off = gram - np.diag(np.diag(gram))
        if len(settings) <= 3:
            worst = float(np.max(np.abs(off)))
            if worst > ORTHOGONALITY_TOL:
                raise InvariantError(
                    "Alice's directions are mutually orthogonal",
                    f"max |x_i . x_j| = {worst:.3e}",
                )
        elif np.any(np.abs(off) > 1.0 - ORTHOGONALITY_TOL):
            raise InvariantError("Alice's directions are distinct axes")

    @property
    def n_settings(self):
        return len(self.settings)

    def vectors(self):
        return np.array([d.vector for d in self.settings])


@dataclass(frozen=True)
class BobConfig:
    """One Bob in the chain: his directions and a single sharpness for all of them."""

    settings: tuple
    sharpness: float

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(self.settings))
        if not self.settings:
            raise InvariantError("a Bob has at least one setting")
        check_sharpness(self.sharpness)

    @property
    def n_settings(self):
        return len(self.settings)

    @property
    def quality_factor(self):
        return weak_equivalents(self.sharpness)[0]

    def vectors(self):
        return np.array([d.vector for d in self.settings])

    def setting(self, index):
        return UnsharpSetting(self.settings[index], self.sharpness)


def uniform_weights(n):
    return tuple([1.0 / n] * n)


@dataclass(frozen=True)
class Scenario:
    """A shared state, Alice, and a sequential chain of Bobs.

    setting_weights holds one probability vector per Bob; None means the
    unbiased choice 1/n for every Bob.
    """

    alice: AliceConfig
    bobs: tuple
    state: Optional[object] = None
    setting_weights: Optional[tuple] = field(default=None)

    def __post_init__(self):
        from .density import singlet

        bobs = tuple(self.bobs)
        object.__setattr__(self, "bobs", bobs)
        if not bobs:
            raise InvariantError("the Bob chain is nonempty")
        n = self.alice.n_settings
        for index, bob in enumerate(bobs, start=1):
            if bob.n_settings != n:
                raise InvariantError(
                    "every Bob has as many settings as Alice",
                    f"Bob {index} has {bob.n_settings}, Alice has {n}",
                )
        if self.state is None:
            object.__setattr__(self, "state", singlet())
        if self.setting_weights is None:
            weights = tuple(uniform_weights(n) for _ in bobs)
        else:
            weights = tuple(tuple(float(w) for w in row) for row in self.setting_weights)
        if len(weights) != len(bobs):
            raise InvariantError("one weight vector per Bob")
        for index, row in enumerate(weights, start=1):
            if len(row) != n or min(row) < 0.0 or abs(sum(row) - 1.0) > WEIGHT_SUM_TOL:
                raise InvariantError(
                    "setting weights are a probability vector",
                    f"Bob {index}: {row}",
                )
        object.__setattr__(self, "setting_weights", weights)

    @property
    def n_settings(self):
        return self.alice.n_settings

    @property
    def chain_length(self):
        return len(self.bobs)

    def bob(self, index):
        """Return Bob number index (1-based, as in the chain)."""
        if not 1 <= index <= len(self.bobs):
            raise DomainError(f"Bob index {index} outside 1..{len(self.bobs)}")
        return self.bobs[index - 1]

    def replace_bob(self, index, bob):
        bobs = list(self.bobs)
        bobs[index - 1] = bob
        return Scenario(self.alice, tuple(bobs), self.state, self.setting_weights)

    def with_sharpness(self, index, lam):
        bob = self.bob(index)
        return self.replace_bob(index, BobConfig(bob.settings, lam))


def unit_check(direction):
    """Return the deviation of a direction's vector norm from 1."""
    return abs(float(np.linalg.norm(direction.vector)) - 1.0)


def is_unit(direction):
    return unit_check(direction) <= UNIT_NORM_TOL
