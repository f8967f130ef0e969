"""Steering functionals evaluated on averaged correlation tables."""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .constants import CFFW_BOUND, CJWR_BOUND, VIOLATION_SLACK
from .model import DomainError, InvariantError

CFFW = "cffw"
CJWR = "cjwr"
KINDS = (CFFW, CJWR)


@dataclass(frozen=True)
class SteeringEvaluation:
    """One steering functional for one Bob; violated iff value > bound."""

    kind: str
    bob_index: int
    value: float
    bound: float
    n_settings: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvariantError("inequality kind is cffw or cjwr", self.kind)
        if self.value < 0.0:
            raise InvariantError("steering value is nonnegative", f"{self.value}")

    @property
    def violated(self):
        return self.value > self.bound + VIOLATION_SLACK

    @property
    def label(self):
        if self.kind == CFFW:
            return f"S_{self.bob_index}"
        return f"F^{self.n_settings}_{self.bob_index}"


def _entries(table):
    return np.asarray(getattr(table, "entries", table), dtype=float)


def cffw_value(c):
    """S = |(c00 + c01, c10 + c11)| + |(c00 - c01, c10 - c11)| for a 2x2 table."""
    return math.hypot(c[0, 0] + c[0, 1], c[1, 0] + c[1, 1]) + math.hypot(
        c[0, 0] - c[0, 1], c[1, 0] - c[1, 1]
    )


def cjwr_value(c):
    n = c.shape[0]
    return abs(float(np.trace(c))) / math.sqrt(n)


def cffw(table):
    c = _entries(table)
    if c.shape != (2, 2):
        raise DomainError(f"CFFW needs a 2x2 table, got shape {c.shape}")
    return SteeringEvaluation(CFFW, getattr(table, "bob_index", 1), cffw_value(c), CFFW_BOUND)


def cjwr(table, bound=CJWR_BOUND):
    """Linear n-settings functional (1/sqrt n)|sum_i C[i][i]|.

    The default bound of 1 holds for orthonormal steered directions; pass
    cjwr_bound(directions) for other direction sets.
    """
    c = _entries(table)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
        raise DomainError(f"CJWR needs a square table with n >= 2, got shape {c.shape}")
    return SteeringEvaluation(
        CJWR, getattr(table, "bob_index", 1), cjwr_value(c), bound, n_settings=c.shape[0]
    )


def cjwr_bound(vectors):
    """Local-hidden-state bound of the normalized linear functional.

    max over sign assignments s of |sum_k s_k u_k| / sqrt(n); equals 1 for
    orthonormal u_k.
    """
    u = np.asarray(vectors, dtype=float)
    n = u.shape[0]
    best = 0.0
    # s_0 = +1 without loss of generality
    for signs in itertools.product((1.0, -1.0), repeat=n - 1):
        s = np.array((1.0,) + signs)
        best = max(best, float(np.linalg.norm(s @ u)))
    return best / math.sqrt(n)


def evaluate(kind, table, bound=None):
    if kind == CFFW:
        return cffw(table)
    if kind == CJWR:
        return cjwr(table) if bound is None else cjwr(table, bound)
    raise DomainError(f"unknown inequality kind {kind!r}")


def evaluate_all(tables, cjwr_limit=CJWR_BOUND):
    """CFFW (two-setting tables only) and CJWR for a list of correlation tables."""
    results = []
    for table in tables:
        if _entries(table).shape == (2, 2):
            results.append(cffw(table))
        results.append(cjwr(table, cjwr_limit))
    return results
