"""Process tomography of the realized inverse channel.

The channel under test is the protocol conditioned on the heralding
(0, 0) Bell outcome, optionally composed with configured noise.  Six
probe states (H, V, D, A, R, L) are each measured in the three mutually
unbiased bases HV, DA, RL, giving 18 settings of two-outcome counts.

Reconstruction is maximum likelihood over physical process matrices:
``chi = T^dag T / Tr(T^dag T)`` with ``T`` complex lower triangular
(16 real parameters), minimizing the exact-gradient negative
log-likelihood by monotone line-searched descent.  ``chi`` follows the
channel-state correspondence with the *input* copy on the more
significant subsystem, so a channel acts as
``rho_out = 2 Tr_in[(rho_in^T (x) I) chi]`` with ``Tr(chi) = 1``.

Counts simulation is seeded and deterministic; per-setting RNG streams
are spawned from the caller's generator so settings could be evaluated
concurrently without changing the results.  The MLE itself is a fixed
deterministic schedule with a fixed start, independent of any seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple

import numpy as np

from . import qmath
from .noise import NoiseConfig, depolarize, depolarize_qubit
from .protocol import BellOutcome, UnitaryOracle, bsm_project, prepare_resource

_SQ2 = 1.0 / math.sqrt(2.0)

#: Probe states, in canonical order.
PROBES = ("H", "V", "D", "A", "R", "L")

#: Measurement bases, in canonical order.  The first listed state of a
#: basis is the "plus" projector of a setting.
BASES = ("HV", "DA", "RL")

PROBE_STATES: Mapping[str, np.ndarray] = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([_SQ2, _SQ2], dtype=complex),
    "A": np.array([_SQ2, -_SQ2], dtype=complex),
    "R": np.array([_SQ2, 1j * _SQ2], dtype=complex),
    "L": np.array([_SQ2, -1j * _SQ2], dtype=complex),
}

BASIS_STATES: Mapping[str, tuple[np.ndarray, np.ndarray]] = {
    "HV": (PROBE_STATES["H"], PROBE_STATES["V"]),
    "DA": (PROBE_STATES["D"], PROBE_STATES["A"]),
    "RL": (PROBE_STATES["R"], PROBE_STATES["L"]),
}

for _v in PROBE_STATES.values():
    _v.setflags(write=False)


class MeasurementSetting(NamedTuple):
    """One (probe state, measurement basis) pair."""

    probe: str
    basis: str


def all_settings() -> tuple[MeasurementSetting, ...]:
    """The 18 tomography settings in canonical (probe-major) order."""
    return tuple(MeasurementSetting(p, b) for p in PROBES for b in BASES)


def _projector(state: np.ndarray) -> np.ndarray:
    return np.outer(state, state.conj())


@dataclass(frozen=True)
class CountTable:
    """Detection counts per setting: ``(n_plus, n_minus)`` summing to ``shots``."""

    shots: int
    counts: Mapping[MeasurementSetting, tuple[int, int]]

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        expected = set(all_settings())
        got = {MeasurementSetting(*k) for k in self.counts}
        if got != expected:
            raise ValueError("count table must cover exactly the 18 canonical settings")
        for setting, (n_plus, n_minus) in self.counts.items():
            if n_plus < 0 or n_minus < 0 or n_plus + n_minus != self.shots:
                raise ValueError(f"counts for {setting} do not sum to shots={self.shots}")

    def to_text(self) -> str:
        """Flat tab-separated table, one row per setting, canonical order."""
        lines = ["probe\tbasis\tn_plus\tn_minus"]
        for setting in all_settings():
            n_plus, n_minus = self.counts[setting]
            lines.append(f"{setting.probe}\t{setting.basis}\t{n_plus}\t{n_minus}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CountTable":
        rows = [line.split("\t") for line in text.strip().splitlines()]
        if not rows or rows[0] != ["probe", "basis", "n_plus", "n_minus"]:
            raise ValueError("missing count table header")
        counts = {}
        for probe, basis, n_plus, n_minus in rows[1:]:
            counts[MeasurementSetting(probe, basis)] = (int(n_plus), int(n_minus))
        shots = sum(next(iter(counts.values())))
        return cls(shots=shots, counts=counts)


# --- Choi representation ---------------------------------------------------


def choi_of_unitary(v: np.ndarray) -> np.ndarray:
    """Trace-1 process matrix of the unitary channel ``rho -> V rho V^dag``.

    Built by acting with ``V`` on the output half of a maximally
    entangled pair, so the result is rank one.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape != (2, 2):
        raise ValueError("choi_of_unitary expects a 2x2 matrix")
    v = qmath.require_unitary(v, "v")
    vec = qmath.apply_gate(qmath.bell_state("phi+"), v, [1])
    return np.outer(vec, vec.conj())


def choi_of_channel(channel: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Exact trace-1 process matrix of a linear, Hermiticity-preserving map.

    ``channel`` only ever receives valid single-qubit density matrices;
    the off-diagonal blocks are recovered by linearity from four pure
    probes.
    """
    p0 = _projector(PROBE_STATES["H"])
    p1 = _projector(PROBE_STATES["V"])
    pd = _projector(PROBE_STATES["D"])
    pr = _projector(PROBE_STATES["R"])
    e00 = channel(p0)
    e11 = channel(p1)
    # |0><1| = P_D + i P_R - (1 + i)/2 (P_0 + P_1), entrywise identity.
    e01 = channel(pd) + 1j * channel(pr) - 0.5 * (1 + 1j) * (e00 + e11)
    e10 = e01.conj().T
    chi = np.zeros((4, 4), dtype=complex)
    chi[0:2, 0:2] = e00
    chi[0:2, 2:4] = e01
    chi[2:4, 0:2] = e10
    chi[2:4, 2:4] = e11
    return 0.5 * chi


def require_physical_chi(chi: np.ndarray) -> np.ndarray:
    """Validate Hermiticity, positivity, and unit trace of a process matrix."""
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (4, 4):
        raise ValueError("process matrix must be 4x4")
    if np.max(np.abs(chi - chi.conj().T)) >= 1e-10:
        raise ValueError("process matrix is not Hermitian")
    if abs(np.trace(chi).real - 1.0) >= 1e-10:
        raise ValueError(f"process matrix trace is {np.trace(chi).real!r}, expected 1")
    if float(np.linalg.eigvalsh(chi).min()) < -1e-8:
        raise ValueError("process matrix has a negative eigenvalue")
    return chi


def trace_preservation_defect(chi: np.ndarray) -> float:
    """Max deviation of the input marginal from I/2.

    Zero for trace-preserving channels; finite-shot MLE results carry a
    statistical defect, which is reported but never enforced.
    """
    chi = np.asarray(chi, dtype=complex)
    marginal = qmath.partial_trace(chi, keep=[0], n=2)
    return float(np.max(np.abs(marginal - 0.5 * np.eye(2))))


def apply_channel(chi: np.ndarray, rho_in: np.ndarray) -> np.ndarray:
    """Act with the channel of ``chi`` on a single-qubit density matrix.

    Computes ``2 Tr_in[(rho_in^T (x) I) chi]``; the factor 2 compensates
    the trace-1 normalization so trace-preserving channels map trace-1
    states to trace-1 states.
    """
    chi = require_physical_chi(chi)
    rho_in = qmath.require_density_matrix(rho_in)
    if rho_in.shape != (2, 2):
        raise ValueError("apply_channel expects a single-qubit density matrix")
    product = np.kron(rho_in.T, np.eye(2)) @ chi
    return 2.0 * qmath.partial_trace(product, keep=[1], n=2)


def process_fidelity(chi: np.ndarray, chi_ideal: np.ndarray) -> float:
    """Trace-overlap fidelity ``Tr[chi chi_ideal] / (Tr[chi] Tr[chi_ideal])``.

    Invariant under positive rescaling of either argument; both inputs
    must be Hermitian PSD with nonzero trace.
    """
    chi = np.asarray(chi, dtype=complex)
    chi_ideal = np.asarray(chi_ideal, dtype=complex)
    if chi.shape != (4, 4) or chi_ideal.shape != (4, 4):
        raise ValueError("process matrices must be 4x4")
    t1 = float(np.trace(chi).real)
    t2 = float(np.trace(chi_ideal).real)
    if abs(t1) < 1e-12 or abs(t2) < 1e-12:
        raise ValueError("process fidelity is undefined for zero-trace arguments")
    return float(np.trace(chi @ chi_ideal).real / (t1 * t2))


# --- Channel under test ----------------------------------------------------


def inverse_channel(
    oracle: UnitaryOracle, noise: NoiseConfig | None = None
) -> Callable[[np.ndarray], np.ndarray]:
    """The protocol's inverse gate as a state map, post-selected on (0, 0).

    Returns a function taking a single-qubit probe state vector to the
    output density matrix, mirroring heralded operation: one resource
    preparation per evaluation, conditioning on the singlet outcome, and
    the configured depolarization applied either to the kept output
    qubit or to both resource qubits before the measurement.
    """
    noise = noise or NoiseConfig()

    def channel(probe: np.ndarray) -> np.ndarray:
        probe = qmath.require_state_vector(probe)
        if probe.shape != (2,):
            raise ValueError("probe must be a single-qubit state")
        resource = prepare_resource(oracle)
        if noise.enabled and noise.applied_to == "resource":
            rho_res = np.outer(resource, resource.conj())
            rho_res = depolarize_qubit(rho_res, noise.depolarizing_p, 0, 2)
            rho_res = depolarize_qubit(rho_res, noise.depolarizing_p, 1, 2)
            rho_joint = np.kron(np.outer(probe, probe.conj()), rho_res)
            herald = np.kron(_projector(qmath.bell_state("psi-")), np.eye(2))
            conditioned = herald @ rho_joint @ herald
            weight = float(np.trace(conditioned).real)
            return qmath.partial_trace(conditioned / weight, keep=[2], n=3)
        joint = np.kron(probe, resource)
        _, post = bsm_project(joint, BellOutcome(0, 0))
        rho = np.outer(post, post.conj())
        if noise.enabled and noise.applied_to == "output":
            rho = depolarize(rho, noise.depolarizing_p)
        return rho

    return channel


def simulate_counts(
    channel: Callable[[np.ndarray], np.ndarray],
    shots: int,
    rng: np.random.Generator,
) -> CountTable:
    """Binomial detection counts for all 18 settings.

    The output state per probe is computed exactly; only the projector
    counts are sampled.  Each setting draws from its own spawned RNG
    stream, so evaluation order cannot change the result.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    settings = all_settings()
    streams = rng.spawn(len(settings))
    counts = {}
    for setting, stream in zip(settings, streams):
        rho_out = channel(PROBE_STATES[setting.probe])
        plus_state, _ = BASIS_STATES[setting.basis]
        p_plus = float(np.real(plus_state.conj() @ rho_out @ plus_state))
        p_plus = min(max(p_plus, 0.0), 1.0)
        n_plus = int(stream.binomial(shots, p_plus))
        counts[setting] = (n_plus, shots - n_plus)
    return CountTable(shots=shots, counts=counts)


# --- Maximum-likelihood reconstruction --------------------------------------


class MleConvergenceError(RuntimeError):
    """Raised when the optimizer hits its iteration budget; carries the
    final negative log-likelihood and iterate for diagnostics."""

    def __init__(self, message: str, *, nll: float, chi: np.ndarray, iterations: int):
        super().__init__(message)
        self.nll = nll
        self.chi = chi
        self.iterations = iterations


@dataclass(frozen=True)
class MleResult:
    """Reconstruction outcome with the per-iteration NLL trace."""

    chi: np.ndarray
    nll_history: tuple[float, ...]
    iterations: int
    converged: bool


def _measurement_operators(counts: CountTable) -> tuple[np.ndarray, np.ndarray]:
    """Stacked Born-rule operators ``B_a`` with ``p_a = Tr[B_a chi]``.

    For probe rho and projector Pi the probability under a trace-1 chi
    is ``2 Tr[(rho^T (x) Pi) chi]``; both projector outcomes of each
    setting contribute one operator and one count.
    """
    ops = []
    observed = []
    for setting in all_settings():
        probe = PROBE_STATES[setting.probe]
        rho_t = np.outer(probe, probe.conj()).T
        plus_state, minus_state = BASIS_STATES[setting.basis]
        n_plus, n_minus = counts.counts[MeasurementSetting(*setting)]
        ops.append(2.0 * np.kron(rho_t, _projector(plus_state)))
        observed.append(n_plus)
        ops.append(2.0 * np.kron(rho_t, _projector(minus_state)))
        observed.append(n_minus)
    return np.stack(ops), np.asarray(observed, dtype=float)


def _initial_factor() -> np.ndarray:
    """Fixed interior starting factor: the maximally mixed chi nudged by a
    small symmetric perturbation so no descent direction starts flat."""
    chi0 = np.eye(4, dtype=complex) / 4.0
    for k in range(3):
        chi0[k, k + 1] += 0.01
        chi0[k + 1, k] += 0.01
    # Lower-triangular T with T^dag T = chi0, via the reversed Cholesky.
    flip = np.eye(4)[::-1]
    lower = np.linalg.cholesky(flip @ chi0 @ flip)
    return flip @ lower.conj().T @ flip


def _chi_from_factor(t: np.ndarray) -> np.ndarray:
    s = t.conj().T @ t
    return s / float(np.trace(s).real)


def _nll_terms(b_ops: np.ndarray, n_obs: np.ndarray, chi: np.ndarray) -> tuple[float, np.ndarray]:
    """Negative log-likelihood and the per-operator probabilities.

    Terms with a zero count follow the 0 log 0 = 0 convention; a zero or
    negative probability with a nonzero count yields +inf, which the
    line search treats as an inadmissible step.
    """
    probs = np.einsum("aij,ji->a", b_ops, chi).real
    mask = n_obs > 0
    if np.any(probs[mask] <= 0.0):
        return math.inf, probs
    return float(-np.sum(n_obs[mask] * np.log(probs[mask]))), probs


def _descent_matrix(
    t: np.ndarray, b_ops: np.ndarray, n_obs: np.ndarray, probs: np.ndarray
) -> np.ndarray:
    """Gradient of the NLL with respect to the 16 free real parameters,
    packed into a lower-triangular complex matrix (real diagonal)."""
    tau = float(np.trace(t.conj().T @ t).real)
    mask = n_obs > 0
    weights = n_obs[mask] / probs[mask]
    r_op = np.einsum("a,aij->ij", weights, b_ops[mask])
    total = float(n_obs.sum())
    grad = (total * t - t @ r_op) / tau
    packed = 2.0 * np.tril(grad)
    np.fill_diagonal(packed, 2.0 * np.real(np.diag(grad)))
    return packed


def mle_fit(
    counts: CountTable,
    max_iterations: int = 5000,
    tol: float = 1e-10,
) -> MleResult:
    """Maximum-likelihood process reconstruction from a count table.

    Minimizes the binomial negative log-likelihood over
    ``chi = T^dag T / Tr(T^dag T)`` by steepest descent with a
    Barzilai-Borwein trial step and Armijo backtracking, so the NLL is
    strictly non-increasing across iterations.  Deterministic: fixed
    start (see :func:`_initial_factor`), fixed schedule, no randomness.
    Stops when the relative NLL improvement drops below ``tol``.
    """
    b_ops, n_obs = _measurement_operators(counts)
    t = _initial_factor()
    nll, probs = _nll_terms(b_ops, n_obs, _chi_from_factor(t))
    history = [nll]
    descent = _descent_matrix(t, b_ops, n_obs, probs)
    grad_norm2 = float(np.vdot(descent, descent).real)
    step = 1.0 / max(1.0, math.sqrt(grad_norm2))
    prev_t = None
    prev_descent = None
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        if grad_norm2 == 0.0:
            converged = True
            iterations -= 1
            break
        # Barzilai-Borwein trial step, falling back to growing the last
        # accepted step; Armijo backtracking guarantees monotonicity.
        trial = 2.0 * step
        if prev_t is not None:
            dt = t - prev_t
            dg = descent - prev_descent
            denom = float(np.vdot(dt, dg).real)
            if denom > 0.0:
                bb = float(np.vdot(dt, dt).real) / denom
                if math.isfinite(bb) and bb > 0.0:
                    trial = bb
        trial = min(max(trial, 1e-14), 1e8)
        accepted = False
        while trial >= 1e-20:
            candidate = t - trial * descent
            cand_nll, cand_probs = _nll_terms(b_ops, n_obs, _chi_from_factor(candidate))
            if cand_nll <= nll - 1e-4 * trial * grad_norm2:
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            # No admissible improvement at double precision: stationary.
            converged = True
            iterations -= 1
            break
        prev_t, prev_descent = t, descent
        t, step = candidate, trial
        improvement = nll - cand_nll
        nll, probs = cand_nll, cand_probs
        history.append(nll)
        descent = _descent_matrix(t, b_ops, n_obs, probs)
        grad_norm2 = float(np.vdot(descent, descent).real)
        if improvement < tol * max(1.0, abs(history[-2])):
            converged = True
            break
    chi = _chi_from_factor(t)
    chi = 0.5 * (chi + chi.conj().T)
    return MleResult(
        chi=chi, nll_history=tuple(history), iterations=iterations, converged=converged
    )


def mle_reconstruct(
    counts: CountTable,
    max_iterations: int = 5000,
    tol: float = 1e-10,
) -> np.ndarray:
    """Reconstructed physical process matrix for a count table.

    Raises :class:`MleConvergenceError` if the iteration budget runs out
    before the relative-improvement stopping rule fires.
    """
    result = mle_fit(counts, max_iterations=max_iterations, tol=tol)
    if not result.converged:
        raise MleConvergenceError(
            f"no convergence after {result.iterations} iterations "
            f"(final NLL {result.nll_history[-1]!r})",
            nll=result.nll_history[-1],
            chi=result.chi,
            iterations=result.iterations,
        )
    return result.chi
