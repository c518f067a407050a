"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one pass/fail line (visible with ``pytest -s``) and
asserts both the numerical tolerance and the runtime budget.  Run with::

    pytest tests/test_acceptance.py -v -s
"""

import math
import time

import numpy as np

from teleinverse.cli import (
    BENCHMARK_UNITARIES,
    RunConfig,
    cmd_reproduce_paper,
)
from teleinverse.noise import NoiseConfig, calibrate_p_for_fidelity
from teleinverse.protocol import (
    BellOutcome,
    UnitaryOracle,
    bsm_probabilities,
    bsm_sample,
    derive_rng,
    prepare_resource,
    run_inversion,
)
from teleinverse.qmath import (
    ID2,
    X,
    Z,
    conjugate_partner,
    random_state_vector,
    random_unitary_params,
    realize_unitary,
    state_fidelity,
)
from teleinverse.tomography import (
    apply_channel,
    choi_of_unitary,
    inverse_channel,
    mle_fit,
    process_fidelity,
    simulate_counts,
)

SEED = 20_250_101


def report(number: int, passed: bool, detail: str, elapsed: float, budget: float):
    status = "PASS" if passed and elapsed < budget else "FAIL"
    print(f"ACCEPTANCE {number} {status}: {detail} [{elapsed:.2f}s / {budget:.0f}s]")
    assert passed, detail
    assert elapsed < budget, f"criterion {number} exceeded runtime budget: {elapsed:.2f}s"


def random_density(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_criterion_1_inversion_exactness():
    start = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 1.0
    for trial in range(1000):
        u = realize_unitary(random_unitary_params(rng))
        phi = random_state_vector(rng)
        result = run_inversion(
            UnitaryOracle(u), phi, derive_rng(SEED, 10, trial), force_success=True
        )
        worst = min(worst, state_fidelity(result.output_state, u.conj().T @ phi))
    elapsed = time.perf_counter() - start
    report(
        1,
        worst >= 1.0 - 1e-10,
        f"forced-(0,0) output fidelity to the exact inverse >= 1 - 1e-10 "
        f"(worst {worst:.3e}) over 1000 random unitaries",
        elapsed,
        5.0,
    )


def test_criterion_2_bsm_statistics():
    start = time.perf_counter()
    n = 100_000
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    worst_freq_dev = 0.0
    worst_exact_dev = 0.0
    for index, matrix in enumerate(BENCHMARK_UNITARIES.values()):
        joint = np.kron(plus, prepare_resource(UnitaryOracle(matrix)))
        for p in bsm_probabilities(joint).values():
            worst_exact_dev = max(worst_exact_dev, abs(p - 0.25))
        rng = derive_rng(SEED, 20, index)
        histogram = {outcome: 0 for outcome in bsm_probabilities(joint)}
        for _ in range(n):
            outcome, _ = bsm_sample(joint, rng)
            histogram[outcome] += 1
        for count in histogram.values():
            worst_freq_dev = max(worst_freq_dev, abs(count / n - 0.25))
    elapsed = time.perf_counter() - start
    report(
        2,
        worst_freq_dev <= 0.01 and worst_exact_dev < 1e-12,
        f"Bell outcome frequencies within 0.25 +/- 0.01 (worst dev {worst_freq_dev:.4f}) "
        f"and exact probabilities 1/4 within 1e-12 (worst dev {worst_exact_dev:.1e}) "
        f"for U1, U2, U3 at N=1e5",
        elapsed,
        10.0,
    )


def test_criterion_3_query_accounting():
    start = time.perf_counter()
    trials = 100_000
    oracle = UnitaryOracle(BENCHMARK_UNITARIES["U1"])
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    queries_total = 0
    rounds_hist: dict[int, int] = {}
    for trial in range(trials):
        result = run_inversion(oracle, plus, derive_rng(SEED, 30, trial))
        queries_total += result.queries
        rounds_hist[result.rounds] = rounds_hist.get(result.rounds, 0) + 1
    mean_queries = queries_total / trials

    # Analytic oracle: rounds ~ geometric(p = 1/4); bins 1..12 plus a tail,
    # all expected counts comfortably above 5.  Chi-square critical value
    # for 12 degrees of freedom at significance 0.01 is 26.217.
    statistic = 0.0
    tail_observed = sum(c for r, c in rounds_hist.items() if r > 12)
    for k in range(1, 13):
        expected = trials * 0.25 * 0.75 ** (k - 1)
        observed = rounds_hist.get(k, 0)
        statistic += (observed - expected) ** 2 / expected
    tail_expected = trials * 0.75**12
    statistic += (tail_observed - tail_expected) ** 2 / tail_expected
    elapsed = time.perf_counter() - start
    report(
        3,
        abs(mean_queries - 7.0) <= 0.15 and statistic < 26.217,
        f"mean queries {mean_queries:.4f} within 7 +/- 0.15 over 1e5 runs and "
        f"rounds ~ geometric(1/4) (chi-square {statistic:.2f} < 26.217 at alpha=0.01)",
        elapsed,
        10.0,
    )


def test_criterion_4_choi_roundtrip_and_partner_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(SEED + 4)
    worst_channel = 0.0
    for _ in range(100):
        v = realize_unitary(random_unitary_params(rng))
        rho = random_density(rng)
        delta = apply_channel(choi_of_unitary(v), rho) - v @ rho @ v.conj().T
        worst_channel = max(worst_channel, float(np.max(np.abs(delta))))
    worst_partner = 0.0
    for _ in range(1000):
        u = realize_unitary(random_unitary_params(rng))
        det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
        delta = conjugate_partner(u) @ u - det * ID2
        worst_partner = max(worst_partner, float(np.max(np.abs(delta))))
    elapsed = time.perf_counter() - start
    report(
        4,
        worst_channel < 1e-12 and worst_partner < 1e-12,
        f"apply_channel(choi(V), rho) = V rho V^dag within 1e-12 (worst {worst_channel:.1e}) "
        f"and U'U = det(U) I within 1e-12 (worst {worst_partner:.1e})",
        elapsed,
        1.0,
    )


def test_criterion_5_noiseless_tomography_closed_loop():
    start = time.perf_counter()
    shots = 100_000
    min_fidelity = 1.0
    monotone = True
    for index, matrix in enumerate(BENCHMARK_UNITARIES.values()):
        channel = inverse_channel(UnitaryOracle(matrix))
        counts = simulate_counts(channel, shots, derive_rng(SEED, 50, index))
        result = mle_fit(counts)
        assert result.converged
        history = result.nll_history
        monotone = monotone and all(b <= a for a, b in zip(history, history[1:]))
        fidelity = process_fidelity(result.chi, choi_of_unitary(matrix.conj().T))
        min_fidelity = min(min_fidelity, fidelity)
    elapsed = time.perf_counter() - start
    report(
        5,
        min_fidelity >= 0.999 and monotone,
        f"noiseless closed loop at 1e5 shots: min F {min_fidelity:.6f} >= 0.999 "
        f"and NLL non-increasing every iteration ({monotone})",
        elapsed,
        60.0,
    )


def test_criterion_6_paper_scale_fidelity_bracket():
    start = time.perf_counter()
    shots = 100_000
    target = 0.9767
    p = calibrate_p_for_fidelity(target)
    noise = NoiseConfig(p, "output")
    fidelities = []
    for index, matrix in enumerate(BENCHMARK_UNITARIES.values()):
        channel = inverse_channel(UnitaryOracle(matrix), noise)
        counts = simulate_counts(channel, shots, derive_rng(SEED, 60, index))
        result = mle_fit(counts)
        assert result.converged
        fidelities.append(process_fidelity(result.chi, choi_of_unitary(matrix.conj().T)))
    average = sum(fidelities) / 3.0
    in_bracket = all(target - 0.01 <= f <= target + 0.01 for f in fidelities)
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"{f:.4f}" for f in fidelities)
    report(
        6,
        in_bracket and abs(average - target) <= 0.008,
        f"calibrated noise p={p:.5f}: per-unitary F [{detail}] each within "
        f"{target} +/- 0.01, average {average:.4f} within +/- 0.008 "
        f"(references 0.9778 / 0.9772 / 0.9752 printed for comparison, not asserted)",
        elapsed,
        60.0,
    )


def test_criterion_7_fidelity_formula_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(SEED + 7)
    chi1 = choi_of_unitary(realize_unitary(random_unitary_params(rng)))
    chi2 = 0.5 * chi1 + 0.5 * np.eye(4) / 4.0
    base = process_fidelity(chi1, chi2)
    scale_ok = all(
        abs(process_fidelity(a * chi1, b * chi2) - base) < 1e-12
        for a, b in ((0.25, 3.0), (10.0, 0.1), (7.0, 7.0))
    )
    self_ok = abs(process_fidelity(chi1, chi1) - 1.0) < 1e-12
    pauli_ok = abs(process_fidelity(choi_of_unitary(X), choi_of_unitary(Z))) < 1e-12
    elapsed = time.perf_counter() - start
    report(
        7,
        scale_ok and self_ok and pauli_ok,
        f"fidelity scale-invariant within 1e-12 ({scale_ok}), F(chi, chi) = 1 for "
        f"rank-1 trace-1 chi ({self_ok}), F(choi(X), choi(Z)) = 0 ({pauli_ok})",
        elapsed,
        1.0,
    )


def test_criterion_8_reproduce_paper_determinism(tmp_path):
    start = time.perf_counter()
    noise = NoiseConfig(calibrate_p_for_fidelity(0.9767), "output")
    for label in ("first", "second"):
        cmd_reproduce_paper(
            RunConfig(shots=100_000, seed=42, noise=noise, output_dir=tmp_path / label)
        )
    artifacts = ["summary.json"] + [
        f"{name}/{file}"
        for name in ("u1", "u2", "u3")
        for file in ("report.json", "counts.tsv", "chi_real.svg", "chi_imag.svg")
    ]
    identical = all(
        (tmp_path / "first" / rel).read_bytes() == (tmp_path / "second" / rel).read_bytes()
        for rel in artifacts
    )
    elapsed = time.perf_counter() - start
    report(
        8,
        identical,
        f"two cmd_reproduce_paper runs with the same seed produced byte-identical "
        f"artifacts ({len(artifacts)} files compared)",
        elapsed,
        120.0,
    )
