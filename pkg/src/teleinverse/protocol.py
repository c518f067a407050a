"""Teleportation-based inversion of a black-box single-qubit gate.

One round of the protocol entangles the input qubit with a two-qubit
resource carrying the hidden gate, performs a Bell-state measurement on
the input qubit and the near half of the resource, and keeps the far
half.  The (0, 0) outcome heralds the inverse gate on the kept qubit;
every other outcome leaves a known Pauli byproduct, which is undone
(spending one extra oracle query) before the round is retried.

Every BSM outcome occurs with probability exactly 1/4 regardless of the
hidden gate or the input, so the round count is geometric with p = 1/4
and a successful run at round ``r`` costs ``2 (r - 1) + 1`` queries.

Runs are independent given disjoint RNG streams (see :func:`derive_rng`);
an oracle's query counter is the only mutable state, so use one oracle
per run when fanning out to workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import qmath
from .qmath import X, Z, bell_state


class BellOutcome(NamedTuple):
    """Bell-measurement result; ``(i, j)`` selects the byproduct X^i Z^j."""

    i: int
    j: int


#: Outcome labels in the row order used by the projection matrix below.
OUTCOMES = (BellOutcome(0, 0), BellOutcome(0, 1), BellOutcome(1, 0), BellOutcome(1, 1))

#: Bell state heralding each outcome: the singlet heralds success.
BELL_KIND_BY_OUTCOME = {
    BellOutcome(0, 0): "psi-",
    BellOutcome(0, 1): "psi+",
    BellOutcome(1, 0): "phi-",
    BellOutcome(1, 1): "phi+",
}

_BSM_BRAS = np.stack([bell_state(BELL_KIND_BY_OUTCOME[o]).conj() for o in OUTCOMES])
_BSM_BRAS.setflags(write=False)

_SINGLET = bell_state("psi-")
_SINGLET.setflags(write=False)


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic substream for (seed, key).

    Independent runs mix their run index into the key, so parallel
    execution reproduces the sequential results irrespective of
    scheduling.
    """
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError("seed and key components must be non-negative integers")
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


class UnitaryOracle:
    """Black-box single-qubit gate.

    The wrapped matrix is write-protected and deliberately not exposed:
    the only operation is "apply to a chosen qubit of a state", which
    increments :attr:`query_count`.  Protocol logic must treat the gate
    as opaque.
    """

    def __init__(self, matrix: np.ndarray):
        matrix = qmath.require_unitary(matrix, "oracle matrix")
        if matrix.shape != (2, 2):
            raise ValueError("oracle matrix must be 2x2")
        self._matrix = matrix.copy()
        self._matrix.setflags(write=False)
        self._matrix_t = self._matrix.T.copy()
        self._matrix_t.setflags(write=False)
        self._query_count = 0

    @property
    def query_count(self) -> int:
        """Number of times the gate has been applied so far."""
        return self._query_count

    def apply(self, state: np.ndarray, target: int) -> np.ndarray:
        """Apply the hidden gate to ``target`` of ``state`` (one query)."""
        state = np.asarray(state, dtype=complex)
        n = state.size.bit_length() - 1
        if state.shape != (1 << n,) or not 1 <= n <= qmath.MAX_QUBITS:
            raise ValueError(f"unsupported state shape {state.shape}")
        if not 0 <= target < n:
            raise ValueError(f"target {target} out of range for {n}-qubit state")
        self._query_count += 1
        if target == 0:
            return (self._matrix @ state.reshape(2, -1)).reshape(-1)
        if target == n - 1:
            return (state.reshape(-1, 2) @ self._matrix_t).reshape(-1)
        return qmath.apply_gate(state, self._matrix, [target])


@dataclass(frozen=True)
class ProtocolResult:
    """Outcome of one repeat-until-success inversion run.

    ``queries = 2 (rounds - 1) + 1`` always: one query per round for the
    fresh resource plus one per retried round for the Pauli-undo, with no
    undo spent on the final round of an aborted run.  ``output_state`` is
    the inverse-gate output on success and ``None`` on failure.
    """

    output_state: np.ndarray | None
    rounds: int
    queries: int
    outcomes: tuple[BellOutcome, ...]
    succeeded: bool


def prepare_resource(oracle: UnitaryOracle) -> np.ndarray:
    """Fresh two-qubit resource: the hidden gate applied to the near half
    of a singlet.  Costs exactly one oracle query."""
    return oracle.apply(_SINGLET, 0)


_INV_SQRT2 = 2.0**-0.5


def _bsm_branches(joint) -> tuple[list[tuple[complex, complex]], list[float]]:
    """Unnormalized kept-qubit state and probability per Bell outcome.

    Contracting the Bell bras of qubits 0 and 1 against the joint state
    in scalar arithmetic: at dimension 8 this beats array-call overhead
    by a wide margin, and the protocol spends almost all of its time
    here.  The Bell projection is complete, so the probabilities sum to
    the squared input norm; that sum doubles as the normalization check.
    """
    if isinstance(joint, np.ndarray):
        if joint.shape != (8,):
            raise ValueError("Bell-state measurement expects a 3-qubit joint state")
        j = joint.tolist()
    else:
        j = list(joint)
        if len(j) != 8:
            raise ValueError("Bell-state measurement expects a 3-qubit joint state")
    r = _INV_SQRT2
    amp = [
        (r * (j[2] - j[4]), r * (j[3] - j[5])),  # psi-  -> (0, 0)
        (r * (j[2] + j[4]), r * (j[3] + j[5])),  # psi+  -> (0, 1)
        (r * (j[0] - j[6]), r * (j[1] - j[7])),  # phi-  -> (1, 0)
        (r * (j[0] + j[6]), r * (j[1] + j[7])),  # phi+  -> (1, 1)
    ]
    probs = [
        a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag
        for a, b in amp
    ]
    if abs(probs[0] + probs[1] + probs[2] + probs[3] - 1.0) >= qmath.ATOL:
        raise ValueError(f"joint state is not normalized: sum |amp|^2 = {sum(probs)!r}")
    return amp, probs


def bsm_probabilities(joint: np.ndarray) -> dict[BellOutcome, float]:
    """Exact Born-rule probability of each Bell outcome on qubits 0 and 1."""
    _, probs = _bsm_branches(joint)
    return dict(zip(OUTCOMES, probs))


def exact_success_probability(joint: np.ndarray) -> float:
    """Probability of the heralding (0, 0) outcome, computed exactly."""
    return bsm_probabilities(joint)[BellOutcome(0, 0)]


def _normalized_row(row: tuple[complex, complex], p: float) -> np.ndarray:
    scale = 1.0 / math.sqrt(p)
    return np.array([row[0] * scale, row[1] * scale], dtype=complex)


def bsm_project(joint: np.ndarray, outcome: BellOutcome) -> tuple[float, np.ndarray]:
    """Force a Bell outcome; returns its probability and the kept-qubit state."""
    outcome = BellOutcome(*outcome)
    amp, probs = _bsm_branches(joint)
    index = OUTCOMES.index(outcome)
    p = probs[index]
    if p < 1e-15:
        raise ValueError(f"outcome {tuple(outcome)} has zero probability")
    return p, _normalized_row(amp[index], p)


def bsm_sample(
    joint: np.ndarray, rng: np.random.Generator
) -> tuple[BellOutcome, np.ndarray]:
    """Sample a Bell outcome on qubits 0 and 1 with Born-rule weights.

    Returns the outcome and the normalized post-measurement state of
    qubit 2.  For a joint state of the form input (x) resource the four
    outcomes are exactly uniform.
    """
    amp, probs = _bsm_branches(joint)
    u = rng.random()
    acc = 0.0
    index = 3
    for k in range(4):
        acc += probs[k]
        if u < acc:
            index = k
            break
    return OUTCOMES[index], _normalized_row(amp[index], probs[index])


def run_inversion(
    oracle: UnitaryOracle,
    input_state: np.ndarray,
    rng: np.random.Generator,
    max_rounds: int = 64,
    force_success: bool = False,
) -> ProtocolResult:
    """Repeat-until-success loop implementing the inverse of the hidden gate.

    Each round prepares a fresh resource (one query) and measures.  On
    (0, 0) the kept qubit holds the inverse gate's output, up to a global
    phase.  Any other outcome ``(i, j)`` leaves ``X^i Z^j`` applied ahead
    of the inverse; the hidden gate (one query) followed by ``X^i`` and
    ``Z^j`` restores the original input and the loop retries.  With
    ``force_success`` the heralding outcome is projected directly in
    round one (debugging aid).

    Exceeding ``max_rounds`` yields a failure result carrying the rounds
    and queries spent; the default bound leaves a residual failure
    probability of ``(3/4)**64`` (about 1e-8).
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    state = qmath.require_state_vector(input_state)
    if state.shape != (2,):
        raise ValueError("input must be a single-qubit state")
    start_queries = oracle.query_count
    outcomes: list[BellOutcome] = []
    for round_index in range(1, max_rounds + 1):
        resource = prepare_resource(oracle)
        s0, s1 = state.tolist()
        r0, r1, r2, r3 = resource.tolist()
        joint = [s0 * r0, s0 * r1, s0 * r2, s0 * r3, s1 * r0, s1 * r1, s1 * r2, s1 * r3]
        if force_success:
            outcome = BellOutcome(0, 0)
            _, post = bsm_project(joint, outcome)
        else:
            outcome, post = bsm_sample(joint, rng)
        outcomes.append(outcome)
        if outcome == (0, 0):
            return ProtocolResult(
                output_state=post,
                rounds=round_index,
                queries=oracle.query_count - start_queries,
                outcomes=tuple(outcomes),
                succeeded=True,
            )
        if round_index == max_rounds:
            break
        # Undo the byproduct: Z^-j X^-i (gate) recovers the input; the
        # Pauli inverses equal X and Z up to an ignored phase.
        state = oracle.apply(post, 0)
        if outcome.i:
            state = X @ state
        if outcome.j:
            state = Z @ state
    return ProtocolResult(
        output_state=None,
        rounds=max_rounds,
        queries=oracle.query_count - start_queries,
        outcomes=tuple(outcomes),
        succeeded=False,
    )
