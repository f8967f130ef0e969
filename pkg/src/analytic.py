"""Closed-form Alice-Bob correlations through a chain of unsharp Bobs.

Each Bob's outcome-averaged Lueders channel acts on the Bloch correlation
matrix as T -> F T + (1 - F) T n n^T. Averaging over a Bob's setting choice
is linear, so the averaged matrix after m - 1 Bobs costs O(m) to compute:

    T_bar = T0 . prod_k [F_k I + (1 - F_k) sum_i w_ki n_ki n_ki^T]

and Bob m's table is C[j][k] = lambda_m x_j^T T_bar y_mk.
"""

from dataclasses import dataclass

import numpy as np

from .constants import SINGULAR_VALUE_TOL, WEIGHT_SUM_TOL
from .model import DomainError, InvariantError, weak_equivalents


@dataclass(frozen=True, eq=False)
class CorrelationMatrixState:
    """Bloch correlation matrix: <(u.sigma) (x) (v.sigma)> = u^T T v."""

    T: np.ndarray

    def __post_init__(self):
        t = np.array(self.T, dtype=float)
        if t.shape != (3, 3):
            raise InvariantError("correlation matrix is 3x3", f"shape {t.shape}")
        largest = float(np.linalg.svd(t, compute_uv=False)[0])
        if largest > 1.0 + SINGULAR_VALUE_TOL:
            raise InvariantError(
                "singular values of T are at most 1", f"largest {largest:.6g}"
            )
        t.setflags(write=False)
        object.__setattr__(self, "T", t)

    @classmethod
    def from_state(cls, state):
        return cls(state.correlation_matrix())

    def correlator(self, u, v):
        return float(np.asarray(u) @ self.T @ np.asarray(v))

    def max_singular_value(self):
        return float(np.linalg.svd(self.T, compute_uv=False)[0])


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Averaged correlators between Alice (rows) and one Bob (columns)."""

    bob_index: int
    entries: np.ndarray

    def __post_init__(self):
        c = np.array(self.entries, dtype=float)
        if c.ndim != 2:
            raise InvariantError("correlation table is a matrix", f"ndim {c.ndim}")
        if c.size and float(np.max(np.abs(c))) > 1.0 + SINGULAR_VALUE_TOL:
            raise InvariantError("correlators lie in [-1, 1]")
        c.setflags(write=False)
        object.__setattr__(self, "entries", c)

    @property
    def shape(self):
        return self.entries.shape

    def __getitem__(self, key):
        return self.entries[key]


def setting_projector(vectors, weights):
    """sum_i w_i n_i n_i^T for a Bob's unit directions."""
    vectors = np.asarray(vectors, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return (vectors.T * weights) @ vectors


def _check_weights(bob, weights):
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (bob.n_settings,):
        raise DomainError(
            f"need {bob.n_settings} setting weights, got shape {weights.shape}"
        )
    if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
        raise DomainError(f"setting weights must be a probability vector: {weights}")
    return weights


def decohere_matrix(t, quality, projector_sum):
    """F T + (1 - F) T P for one Bob with quality factor F and weighted projector P."""
    return quality * t + (1.0 - quality) * t @ projector_sum


def decohere_average(state, bob, weights):
    """Average a Bob's outcome- and setting-averaged channel into the correlation matrix."""
    weights = _check_weights(bob, weights)
    proj = setting_projector(bob.vectors(), weights)
    return CorrelationMatrixState(decohere_matrix(state.T, bob.quality_factor, proj))


def chain_tables(t0, alice_vectors, bob_vectors, sharpness, weights):
    """Raw-array form of every Bob's averaged table in one pass.

    Args:
        t0: initial 3x3 correlation matrix.
        alice_vectors: n x 3 array of Alice's unit directions.
        bob_vectors: list of n x 3 arrays, one per Bob in chain order.
        sharpness: list of lambdas, one per Bob.
        weights: list of setting-probability vectors, one per Bob.

    Returns:
        A list of n x n arrays, table k belonging to Bob k + 1.
    """
    t = np.asarray(t0, dtype=float)
    tables = []
    for vectors, lam, w in zip(bob_vectors, sharpness, weights):
        tables.append(lam * alice_vectors @ t @ vectors.T)
        quality = np.sqrt(1.0 - lam * lam)
        t = decohere_matrix(t, quality, setting_projector(vectors, w))
    return tables


def averaged_state(scenario, bob_index):
    """Correlation matrix seen by Bob bob_index after averaging over all earlier Bobs."""
    if not 1 <= bob_index <= scenario.chain_length:
        raise DomainError(
            f"Bob index {bob_index} outside 1..{scenario.chain_length}"
        )
    state = CorrelationMatrixState.from_state(scenario.state)
    for bob, weights in zip(
        scenario.bobs[: bob_index - 1], scenario.setting_weights[: bob_index - 1]
    ):
        state = decohere_average(state, bob, weights)
    return state


def correlation_table(scenario, bob_index):
    state = averaged_state(scenario, bob_index)
    bob = scenario.bob(bob_index)
    entries = bob.sharpness * scenario.alice.vectors() @ state.T @ bob.vectors().T
    return CorrelationTable(bob_index, entries)


def correlation_tables(scenario):
    """Tables for every Bob in the chain, computed in a single pass."""
    raw = chain_tables(
        scenario.state.correlation_matrix(),
        scenario.alice.vectors(),
        [bob.vectors() for bob in scenario.bobs],
        [bob.sharpness for bob in scenario.bobs],
        scenario.setting_weights,
    )
    return [CorrelationTable(k, table) for k, table in enumerate(raw, start=1)]


def conditional_correlation(scenario, bob_index, upstream_choices):
    """Table for Bob bob_index when every earlier Bob used a fixed setting.

    This is the per-setting correlation before unbiased averaging; no
    inequality uses it.
    """
    upstream_choices = tuple(upstream_choices)
    if len(upstream_choices) != bob_index - 1:
        raise DomainError(
            f"Bob {bob_index} needs {bob_index - 1} upstream choices, "
            f"got {len(upstream_choices)}"
        )
    bob = scenario.bob(bob_index)
    t = scenario.state.correlation_matrix()
    for upstream, choice in zip(scenario.bobs, upstream_choices):
        if not 0 <= choice < upstream.n_settings:
            raise DomainError(f"setting index {choice} outside 0..{upstream.n_settings - 1}")
        n = upstream.settings[choice].vector
        quality, _ = weak_equivalents(upstream.sharpness)
        t = decohere_matrix(t, quality, np.outer(n, n))
    entries = bob.sharpness * scenario.alice.vectors() @ t @ bob.vectors().T
    return CorrelationTable(bob_index, entries)
