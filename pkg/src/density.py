"""Two-qubit density-matrix engine: states, unsharp effects, Lueders updates and
exact joint outcome distributions for Alice followed by a chain of Bobs.

This is the brute-force oracle the analytic engine is checked against. Tensor
order is Alice (first factor) then Bob's qubit; every Bob acts on the second
factor in chain order.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .constants import (
    EIGENVALUE_FLOOR,
    HERMITIAN_TOL,
    NEGATIVE_PROBABILITY_TOL,
    PROBABILITY_SUM_TOL,
    TRACE_TOL,
)
from .model import DomainError, InvariantError, check_sharpness

logger = logging.getLogger(__name__)

OUTCOMES = (+1, -1)

IDENTITY2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

SINGLET = "singlet"
_SINGLET_VECTOR = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
_SINGLET_MATRIX = np.outer(_SINGLET_VECTOR, _SINGLET_VECTOR.conj())


def spin_operator(vector):
    """Return v . sigma for a real 3-vector v."""
    vx, vy, vz = vector
    return vx * PAULI_X + vy * PAULI_Y + vz * PAULI_Z


def projector(direction, outcome):
    """Projector onto the outcome (+1/-1) eigenspace of direction . sigma."""
    return 0.5 * (IDENTITY2 + outcome * spin_operator(direction.vector))


def _check_outcome(outcome):
    if outcome not in OUTCOMES:
        raise DomainError(f"outcome must be +1 or -1, got {outcome!r}")


# --- States ---


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """A 4x4 density matrix on Alice's and Bob's qubits."""

    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        if rho.shape != (4, 4):
            raise InvariantError("two-qubit state is 4x4", f"shape {rho.shape}")
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        if herm > HERMITIAN_TOL:
            raise InvariantError("state is Hermitian", f"deviation {herm:.3e}")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvariantError("state has unit trace", f"trace {trace:.6g}")
        smallest = float(np.min(np.linalg.eigvalsh(rho)))
        if smallest < EIGENVALUE_FLOOR:
            raise InvariantError(
                "state is positive semidefinite", f"eigenvalue {smallest:.3e}"
            )
        if self.name == SINGLET:
            gap = float(np.max(np.abs(rho - _SINGLET_MATRIX)))
            if gap > HERMITIAN_TOL:
                raise InvariantError("a state named singlet is the singlet", f"deviation {gap:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    def expectation(self, operator):
        return float(np.real(np.trace(self.matrix @ operator)))

    def correlation_matrix(self):
        """Bloch correlation matrix T with T[u, v] = tr(rho sigma_u (x) sigma_v)."""
        if self.name == SINGLET:
            return -np.eye(3)
        t = np.empty((3, 3))
        for u, su in enumerate(PAULIS):
            for v, sv in enumerate(PAULIS):
                t[u, v] = self.expectation(np.kron(su, sv))
        return t

    def reduced_alice(self):
        return np.einsum("ijkj->ik", self.matrix.reshape(2, 2, 2, 2))

    def reduced_bob(self):
        return np.einsum("ijil->jl", self.matrix.reshape(2, 2, 2, 2))


def singlet():
    """The singlet (|01> - |10>)/sqrt(2) as a density matrix."""
    return TwoQubitState(_SINGLET_MATRIX, name=SINGLET)


def pure_state(amplitudes):
    psi = np.asarray(amplitudes, dtype=complex)
    norm = np.linalg.norm(psi)
    if psi.shape != (4,) or norm == 0:
        raise DomainError("a pure two-qubit state needs 4 amplitudes, not all zero")
    psi = psi / norm
    return TwoQubitState(np.outer(psi, psi.conj()))


def werner(visibility):
    """Singlet mixed with white noise: v |singlet><singlet| + (1 - v) I/4."""
    if not 0.0 <= visibility <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {visibility}")
    rho = visibility * singlet().matrix + (1.0 - visibility) * np.eye(4) / 4.0
    return TwoQubitState(rho)


# --- Effects ---


@dataclass(frozen=True, eq=False)
class QubitEffect:
    """A two-outcome POVM element on one qubit."""

    matrix: np.ndarray

    def __post_init__(self):
        e = np.array(self.matrix, dtype=complex)
        if e.shape != (2, 2):
            raise InvariantError("qubit effect is 2x2", f"shape {e.shape}")
        if float(np.max(np.abs(e - e.conj().T))) > HERMITIAN_TOL:
            raise InvariantError("effect is Hermitian")
        eig = np.linalg.eigvalsh(e)
        if eig[0] < EIGENVALUE_FLOOR or eig[-1] > 1.0 - EIGENVALUE_FLOOR:
            raise InvariantError("effect eigenvalues lie in [0, 1]", f"{eig}")
        e.setflags(write=False)
        object.__setattr__(self, "matrix", e)

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def sqrt(self):
        """Positive square root, the Kraus operator of the Lueders instrument."""
        eig, vecs = np.linalg.eigh(self.matrix)
        root = np.sqrt(np.clip(eig, 0.0, None))
        return (vecs * root) @ vecs.conj().T


def effect(direction, lam, outcome):
    """E = lam * P_outcome + (1 - lam) * I/2 for a spin measurement along direction."""
    lam = check_sharpness(lam)
    _check_outcome(outcome)
    return QubitEffect(lam * projector(direction, outcome) + (1.0 - lam) * IDENTITY2 / 2)


def on_bob(operator):
    return np.kron(IDENTITY2, operator)


def on_alice(operator):
    return np.kron(operator, IDENTITY2)


def lueders_branch(rho, kraus):
    """Unnormalized post-measurement state for one outcome, Kraus acting on Bob."""
    k = on_bob(kraus)
    return k @ rho @ k.conj().T


def averaged_channel(rho, direction, lam):
    """Lueders update on Bob's qubit summed over both outcomes."""
    total = np.zeros((4, 4), dtype=complex)
    for b in OUTCOMES:
        total += lueders_branch(rho, effect(direction, lam, b).sqrt())
    return total


def dephasing_form(rho, direction, lam):
    """F rho + (1 - F)(P+ rho P+ + P- rho P-) with F = sqrt(1 - lam^2)."""
    f = np.sqrt(1.0 - check_sharpness(lam) ** 2)
    dephased = np.zeros((4, 4), dtype=complex)
    for b in OUTCOMES:
        p = on_bob(projector(direction, b))
        dephased += p @ rho @ p
    return f * rho + (1.0 - f) * dephased


# --- Distributions ---


def observer_labels(chain_length):
    return ("Alice",) + tuple(f"Bob{k}" for k in range(1, chain_length + 1))


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Joint probabilities keyed by outcome tuples ordered like observers."""

    observers: tuple
    table: dict

    def __post_init__(self):
        object.__setattr__(self, "observers", tuple(self.observers))
        total = 0.0
        for outcomes, p in self.table.items():
            if len(outcomes) != len(self.observers):
                raise InvariantError("outcome tuples match the observers")
            if p < -NEGATIVE_PROBABILITY_TOL or p > 1.0 + PROBABILITY_SUM_TOL:
                raise InvariantError("probabilities lie in [0, 1]", f"{outcomes}: {p}")
            total += p
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise InvariantError("probabilities sum to 1", f"sum {total:.15g}")

    def probability(self, outcomes):
        return self.table.get(tuple(outcomes), 0.0)

    def correlation(self, first, second):
        """E[o_first * o_second] for two observer labels."""
        i = self.observers.index(first)
        j = self.observers.index(second)
        return sum(p * o[i] * o[j] for o, p in self.table.items())

    def rows(self):
        """Outcome tuples in a fixed order (+1 before -1 for each observer)."""
        for outcomes in itertools.product(OUTCOMES, repeat=len(self.observers)):
            yield outcomes, self.probability(outcomes)


def joint_distribution(scenario, alice_choice, bob_choices):
    """Exact distribution of (a, b1, ..., bn) for one setting choice per party."""
    n = scenario.n_settings
    bob_choices = tuple(bob_choices)
    if len(bob_choices) != scenario.chain_length:
        raise DomainError(
            f"need {scenario.chain_length} Bob choices, got {len(bob_choices)}"
        )
    for index in (alice_choice,) + bob_choices:
        if not 0 <= index < n:
            raise DomainError(f"setting index {index} outside 0..{n - 1}")

    rho = scenario.state.matrix
    alice_dir = scenario.alice.settings[alice_choice]
    branches = []
    for a in OUTCOMES:
        p = on_alice(projector(alice_dir, a))
        branches.append(((a,), p @ rho @ p))

    for bob, choice in zip(scenario.bobs, bob_choices):
        setting = bob.setting(choice)
        kraus = {
            b: effect(setting.direction, setting.sharpness, b).sqrt() for b in OUTCOMES
        }
        branches = [
            (outcomes + (b,), lueders_branch(branch, kraus[b]))
            for outcomes, branch in branches
            for b in OUTCOMES
        ]

    table = {outcomes: float(np.real(np.trace(branch))) for outcomes, branch in branches}
    return OutcomeDistribution(observer_labels(scenario.chain_length), table)


def marginal(dist, keep):
    """Sum out every observer not named in keep."""
    keep = [label for label in dist.observers if label in set(keep)]
    if not keep:
        raise DomainError("marginal needs a nonempty subset of observers")
    positions = [dist.observers.index(label) for label in keep]
    table = {}
    for outcomes, p in dist.table.items():
        key = tuple(outcomes[i] for i in positions)
        table[key] = table.get(key, 0.0) + p
    total = sum(table.values())
    table = {k: v / total for k, v in table.items()}
    return OutcomeDistribution(tuple(keep), table)


def _max_table_gap(dists):
    """Largest pointwise difference between marginal tables over the same keys."""
    keys = set()
    for d in dists:
        keys.update(d.table)
    gap = 0.0
    for key in keys:
        values = [d.probability(key) for d in dists]
        gap = max(gap, max(values) - min(values))
    return gap


@dataclass(frozen=True)
class SignallingReport:
    """Maximum deviations of the no-signalling structure over all setting choices.

    alice_gap: dependence of the Bobs' marginal on Alice's choice (must vanish).
    last_bob_gap: dependence of the marginal without the last Bob on his choice
        (must vanish).
    witness: largest dependence of a marginal on an earlier Bob's choice when
        that Bob is summed out (generally nonzero).
    witness_bob: which Bob produced the witness.
    """

    alice_gap: float
    last_bob_gap: float
    witness: float
    witness_bob: int


def signalling_report(scenario):
    if scenario.chain_length < 2:
        raise DomainError("the signalling report needs at least two Bobs")
    n = scenario.n_settings
    chain = scenario.chain_length
    labels = observer_labels(chain)
    dists = {}
    for choice in itertools.product(range(n), repeat=chain + 1):
        dists[choice] = joint_distribution(scenario, choice[0], choice[1:])

    def gap_over(position):
        keep = [label for i, label in enumerate(labels) if i != position]
        worst = 0.0
        others = [i for i in range(chain + 1) if i != position]
        for rest in itertools.product(range(n), repeat=chain):
            group = []
            for value in range(n):
                choice = [0] * (chain + 1)
                for i, r in zip(others, rest):
                    choice[i] = r
                choice[position] = value
                group.append(marginal(dists[tuple(choice)], keep))
            worst = max(worst, _max_table_gap(group))
        return worst

    alice_gap = gap_over(0)
    last_bob_gap = gap_over(chain)
    witness, witness_bob = 0.0, 1
    for k in range(1, chain):
        gap = gap_over(k)
        if gap > witness:
            witness, witness_bob = gap, k
    logger.debug(
        "signalling: alice %.3e, last bob %.3e, witness %.4f (Bob %d)",
        alice_gap,
        last_bob_gap,
        witness,
        witness_bob,
    )
    return SignallingReport(alice_gap, last_bob_gap, witness, witness_bob)
