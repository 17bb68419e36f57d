"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

import test_hamiltonian as ham_props
import test_pauli as pauli_props
import test_sim as sim_props
from dense_oracle import hamiltonian_dense, pauli_coefficients, pauli_dense, twirl_dense
from hamlearn.hamiltonian import LowIntersectionHamiltonian, all_bitstrings
from hamlearn.instances import heisenberg_chain
from hamlearn.learner import coefficients_from_eigenvalues, eigenvalues_from_coefficients, learn_all
from hamlearn.pauli import PauliString
from hamlearn.reshape import TwirlDistribution, effective_hamiltonian, ensemble_average
from hamlearn.rpe import bernoulli_oracle, estimate_phase, wrap
from hamlearn.sim import NoiseModel, SimulatedDevice
from hamlearn.studies import RunConfig, deviation_study, scaling_study, spam_robustness_study, tv_study


@pytest.fixture
def verdict(capsys):
    def report(number, name, passed, detail, start, budget):
        elapsed = time.perf_counter() - start
        ok = bool(passed) and elapsed < budget
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {name}: {detail} "
                  f"({elapsed:.1f}s, budget {budget:.0f}s)")
        assert passed, detail
        assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
    return report


def test_c01_reshaping_identities(verdict):
    start = time.perf_counter()
    checks = []
    # single qubit: half H plus half XHX leaves only the X term
    terms1 = [("X", 0.3), ("Y", -0.2), ("Z", 0.5)]
    h1 = LowIntersectionHamiltonian.from_terms(1, terms1)
    eff1 = effective_hamiltonian(h1, TwirlDistribution(1, ((0,),), (("X",),)))
    dense1 = twirl_dense(hamiltonian_dense(1, terms1), [pauli_dense("I"), pauli_dense("X")], [0.5, 0.5])
    checks.append({str(p): c for p, c in eff1.terms} == {"X": 0.3})
    checks.append(pauli_coefficients(dense1, 1) == pytest.approx({"X": 0.3}, abs=1e-15))
    # two qubits: X on the first and Z on the second keep XZ, XI, IZ
    rng = np.random.default_rng(0)
    terms2 = [(a + b, rng.uniform(-1, 1)) for a in "IXYZ" for b in "IXYZ"][1:]
    h2 = LowIntersectionHamiltonian.from_terms(2, terms2)
    eff2 = {str(p): c for p, c in effective_hamiltonian(h2, TwirlDistribution(2, ((0, 1),), (("X", "Z"),))).terms}
    lam2 = dict(terms2)
    checks.append(eff2 == {k: lam2[k] for k in ("XI", "IZ", "XZ")})
    dense2 = twirl_dense(hamiltonian_dense(2, terms2), [pauli_dense(s) for s in ("II", "XI", "IZ", "XZ")],
                         [0.25] * 4)
    checks.append(pauli_coefficients(dense2, 2) == pytest.approx(eff2, abs=1e-14))
    # chain: twirling qubits 2, 5, 8 fully decouples the patches {0,1}, {3,4}, {6,7}
    n = 9
    h3 = heisenberg_chain(n, seed=1)
    us = [PauliString.identity(n)] + [PauliString.from_letters(n, {2: g, 5: g, 8: g}) for g in "XYZ"]
    avg = {str(p): c for p, c in ensemble_average(h3, us).terms}
    patches = [{0, 1}, {3, 4}, {6, 7}]
    want = {str(p): c for p, c in h3.terms if any(p.support <= s for s in patches)}
    checks.append(avg == want)
    small = heisenberg_chain(6, seed=1)
    us6 = [PauliString.identity(6)] + [PauliString.from_letters(6, {2: g, 5: g}) for g in "XYZ"]
    dense3 = twirl_dense(hamiltonian_dense(6, [(str(p), c) for p, c in small.terms]),
                         [pauli_dense(str(u)) for u in us6], [0.25] * 4)
    want6 = [(str(p), c) for p, c in small.terms if p.support <= {0, 1} or p.support <= {3, 4}]
    checks.append(np.abs(dense3 - hamiltonian_dense(6, want6)).max() < 1e-14)
    verdict(1, "reshaping identities", all(checks), f"{sum(checks)}/{len(checks)} identities exact",
            start, 1.0)


def test_c02_hadamard_round_trip(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(100):
        m = 1 + i % 3
        coeffs = dict(zip(all_bitstrings(m), rng.uniform(-1, 1, size=2 ** m)))
        back = coefficients_from_eigenvalues(eigenvalues_from_coefficients(coeffs, m), m)
        worst = max(worst, max(abs(back[b] - coeffs[b]) for b in coeffs))
    verdict(2, "Hadamard round trip", worst <= 1e-12, f"max error {worst:.1e} over 100 spectra",
            start, 1.0)


def test_c03_qdrift_deviation(verdict, tmp_path):
    start = time.perf_counter()
    cfg = RunConfig(t=1.0, r_list=[8, 16, 32, 64, 128], n_list=[4, 6, 8, 10], n_sequences=400,
                    out_dir=str(tmp_path))
    assert cfg.n_sequences >= 200
    rep = deviation_study(cfg, "qdrift")
    ok = -1.2 <= rep.slope <= -0.8 and rep.checks["size_ratio"] < 2
    verdict(3, "qDRIFT deviation", ok,
            f"slope {rep.slope:.3f} in [-1.2, -0.8], N-ratio {rep.checks['size_ratio']:.2f} < 2",
            start, 600)


def test_c04_trotter_deviation(verdict, tmp_path):
    start = time.perf_counter()
    cfg = RunConfig(t=1.0, r_list=[8, 16, 32, 64, 128], n_list=[4, 6, 8, 10], out_dir=str(tmp_path))
    rep = deviation_study(cfg, "trotter")
    ok = -2.2 <= rep.slope <= -1.8 and rep.checks["size_ratio"] < 2
    verdict(4, "Trotter deviation", ok,
            f"slope {rep.slope:.3f} in [-2.2, -1.8], N-ratio {rep.checks['size_ratio']:.2f} < 2",
            start, 300)


def test_c05_end_to_end_learning(verdict):
    start = time.perf_counter()
    eps = delta = 0.05
    wins = {}
    worst = {}
    for backend in ("qdrift", "trotter"):
        wins[backend] = 0
        worst[backend] = 0.0
        for run in range(20):
            h = heisenberg_chain(6, seed=1000 + run)
            res = learn_all(SimulatedDevice(h, seed=run), h.paulis, eps, delta, backend=backend, seed=run)
            err = res.max_error(h)
            wins[backend] += err <= eps
            worst[backend] = max(worst[backend], err)
    ok = all(w >= 18 for w in wins.values())
    detail = ", ".join(f"{b} {wins[b]}/20 (worst {worst[b]:.1e})" for b in wins)
    verdict(5, "end-to-end learning", ok, detail, start, 1200)


def test_c06_heisenberg_scaling(verdict, tmp_path):
    start = time.perf_counter()
    parts, ok = [], True
    for backend in ("qdrift", "trotter"):
        cfg = RunConfig(eps_list=[0.1, 0.05, 0.025, 0.0125], backend=backend, out_dir=str(tmp_path))
        rep = scaling_study(cfg)
        ratio = rep.checks["experiment_ratio"]
        ok &= 0.8 <= rep.slope <= 1.2 and ratio <= 4
        parts.append(f"{backend} slope {rep.slope:.3f}, experiment ratio {ratio:.2f}")
    verdict(6, "Heisenberg scaling", ok, "; ".join(parts), start, 2700)


def test_c07_spam_robustness(verdict, tmp_path):
    start = time.perf_counter()
    cfg = RunConfig(eta_list=[0.25], runs=20, out_dir=str(tmp_path))
    assert NoiseModel(eta_meas=0.25).eta_meas + 0.1 < 1 / math.sqrt(8)
    rep = spam_robustness_study(cfg)
    _, runs, rate, worst, asserted = rep.rows[0]
    floor = rep.checks["success_floor"]
    verdict(7, "SPAM robustness", asserted and rate >= floor,
            f"success {rate:.2f} >= {floor:.3f} at eta_meas=0.25 over {runs} runs", start, 1800)


def worst_case_offset(theta, size):
    """Per multiple, the sign pattern of a +-size offset that rotates the measured angle furthest."""
    def angle_error(ell, sc, ss):
        x = math.cos(ell * theta) + 2 * size * sc
        y = math.sin(ell * theta) + 2 * size * ss
        return abs(wrap(math.atan2(y, x) - ell * theta))

    def fn(ell, quadrature):
        sc, ss = max(((a, b) for a in (1, -1) for b in (1, -1)), key=lambda s: angle_error(ell, *s))
        return size * (sc if quadrature == "cos" else ss)
    return fn


def test_c08_rpe_contract(verdict):
    start = time.perf_counter()
    target, delta, trials = 0.01, 0.1, 500
    thetas = [0.0, math.pi / 5, -math.pi / 5, math.pi / 3, -math.pi / 3]
    rng = np.random.default_rng(8)
    worst_rate, worst_case = 0.0, None
    for theta in thetas:
        offsets = {"+0.30": lambda l, q: 0.30, "-0.30": lambda l, q: -0.30,
                   "worst-case": worst_case_offset(theta, 0.30)}
        for name, fn in offsets.items():
            fails = 0
            for _ in range(trials):
                est = estimate_phase(bernoulli_oracle(theta, rng, offset_fn=fn), target, delta)
                fails += abs(wrap(est.theta - theta)) > target
            if fails / trials >= worst_rate:
                worst_rate, worst_case = fails / trials, (round(theta, 3), name)
    sums = [estimate_phase(bernoulli_oracle(0.5, rng), t, delta).multiple_sum
            for t in (0.04, 0.02, 0.01, 0.005, 0.0025)]
    ratios = [b / a for a, b in zip(sums, sums[1:])]
    ok = worst_rate <= 0.15 and all(1.7 <= r <= 2.6 for r in ratios)
    verdict(8, "RPE contract", ok,
            f"worst failure {worst_rate:.3f} at {worst_case}; cost ratios {min(ratios):.2f}-{max(ratios):.2f}",
            start, 120)


def test_c09_tv_bound(verdict, tmp_path):
    start = time.perf_counter()
    rep = tv_study(RunConfig(out_dir=str(tmp_path)))
    ok = len(rep.rows) == 100 and rep.checks["violations"] == 0
    verdict(9, "single-experiment TV bound", ok,
            f"{rep.checks['violations']} violations over {len(rep.rows)} grid points", start, 1.0)


def test_c10_property_suites(verdict):
    start = time.perf_counter()
    suites = [
        pauli_props.test_conjugation_sign_matches_dense_oracle,
        pauli_props.test_conjugation_is_an_involution,
        ham_props.test_coloring_is_valid_by_brute_force,
        ham_props.test_clusters_cover_every_term,
        sim_props.test_reshaped_evolution_preserves_norm,
        sim_props.test_evolve_exact_matches_expm_and_preserves_norm,
    ]
    for suite in suites:
        suite()
    for r in (1, 3, 8):
        sim_props.test_qdrift_with_identity_distribution_is_exact(r)
    sim_props.test_qdrift_is_seed_deterministic()
    sim_props.test_device_ledger_and_determinism()
    verdict(10, "property suites", True, f"{len(suites) + 5} suites green", start, 120)
