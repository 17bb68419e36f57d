"""Verification studies: reshaping deviation, scaling of the learner, SPAM
robustness and the single-experiment distinguishability bound."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import stats

from .hamiltonian import LowIntersectionHamiltonian, build_cluster_graph_and_color, build_clusters
from .hamiltonian import build_qubit_graph_and_color
from .instances import generate_instance
from .io import config_hash, load_hamiltonian, write_csv, write_json
from .learner import LearnerConfig, build_prep_pair, learn_all
from .reshape import TwirlDistribution, build_trotter_ensemble, effective_hamiltonian
from .sim import (NoiseModel, SimulatedDevice, evolve_exact, marginal_probabilities, qdrift_evolve,
                  trotter_evolve)


@dataclass
class RunConfig:
    hamiltonian: dict = field(default_factory=lambda: {"kind": "heisenberg_chain", "n_qubits": 6})
    backend: str = "qdrift"
    epsilon: float = 0.05
    delta: float = 0.05
    eta_prep: float = 0.0
    eta_meas: float = 0.0
    seed: int = 0
    n_cap: int = 14
    out_dir: str = "results"
    # deviation study
    t: float = 1.0
    r_list: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    n_list: list = field(default_factory=lambda: [4, 6, 8, 10])
    fixed_r: int = 16
    n_sequences: int = 400
    gamma: list = field(default_factory=lambda: ["Z", "Z"])
    # learning studies
    eps_list: list = field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])
    delta_list: list = field(default_factory=list)
    eta_list: list = field(default_factory=lambda: [0.0, 0.1, 0.25, 0.45])
    runs: int = 20
    # distinguishability bound
    tv_epsilons: list = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.3, 1.0])
    tv_times: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 5.0, 20.0])
    tv_etas: list = field(default_factory=lambda: [0.0, 0.1, 0.25, 0.45])
    tv_delta: float = 0.01

    def __post_init__(self):
        for name in ("eta_prep", "eta_meas"):
            if not 0 <= getattr(self, name) < 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5)")
        if any(not 0 <= e < 0.5 for e in self.eta_list + self.tv_etas):
            raise ValueError("noise grid values must lie in [0, 0.5)")
        if not 0 < self.epsilon < 1 or not 0 < self.delta < 1:
            raise ValueError("epsilon and delta must lie in (0, 1)")
        if self.backend not in ("qdrift", "trotter"):
            raise ValueError(f"unknown backend {self.backend!r}")

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> RunConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def build_hamiltonian(self, n_qubits: int | None = None) -> LowIntersectionHamiltonian:
        source = dict(self.hamiltonian)
        if "file" in source:
            h = load_hamiltonian(source["file"])
        else:
            kind = source.pop("kind", "heisenberg_chain")
            n = n_qubits if n_qubits is not None else source.pop("n_qubits", 6)
            source.pop("n_qubits", None)
            coeff_range = tuple(source.pop("coeff_range", (-1.0, 1.0)))
            h = generate_instance(kind, n, seed=source.pop("seed", self.seed),
                                  coeff_range=coeff_range, **source)
        if h.n_qubits > self.n_cap:
            raise ValueError(f"{h.n_qubits} qubits exceeds the cap {self.n_cap}")
        return h


@dataclass
class StudyReport:
    name: str
    columns: list[str]
    rows: list[list]
    slope: float | None = None
    slope_ci: tuple[float, float] | None = None
    tolerance: tuple[float, float] | None = None
    passed: bool | None = None
    checks: dict[str, Any] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def manifest(self) -> dict:
        return {"study": self.name, "config": self.config, "config_hash": self.config_hash,
                "slope": self.slope, "slope_ci": self.slope_ci, "tolerance": self.tolerance,
                "passed": self.passed, "checks": self.checks, "n_rows": len(self.rows)}

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        csv_path = write_csv(out / f"{self.name}.csv", self.columns, self.rows)
        json_path = write_json(out / f"{self.name}.json", self.manifest())
        return csv_path, json_path

    def summary(self) -> str:
        bits = [f"{self.name}: rows={len(self.rows)}"]
        if self.slope is not None:
            bits.append(f"slope={self.slope:.3f}")
        if self.tolerance is not None:
            bits.append(f"tolerance=[{self.tolerance[0]}, {self.tolerance[1]}]")
        for k, v in self.checks.items():
            bits.append(f"{k}={v}")
        bits.append("PASS" if self.passed else ("FAIL" if self.passed is not None else "n/a"))
        return " ".join(bits)


def fit_loglog(x: Sequence[float], y: Sequence[float], level: float = 0.95):
    """Least-squares slope of log y against log x with a two-sided confidence interval."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 4:
        raise ValueError("slope fit needs at least 4 points")
    if np.any(x <= 0) or np.any(y <= 0) or np.ptp(np.log(x)) == 0:
        raise ValueError("slope fit needs positive, non-degenerate data")
    fit = stats.linregress(np.log(x), np.log(y))
    half = stats.t.ppf(0.5 + level / 2, len(x) - 2) * fit.stderr
    return float(fit.slope), (float(fit.slope - half), float(fit.slope + half))


# --------------------------------------------------------------------------
# Reshaping deviation

@dataclass
class DeviationSetup:
    h: LowIntersectionHamiltonian
    cluster: tuple[int, ...]
    distribution: TwirlDistribution
    ensemble: Any
    prep: Any
    ideal: float

    def initial_state(self, rows: int | None = None) -> np.ndarray:
        n = self.h.n_qubits
        psi = np.zeros(1 << n, dtype=complex)
        psi[0] = 1.0
        psi = self.prep.apply(psi, n)
        return psi if rows is None else np.repeat(psi[None, :], rows, axis=0)

    def observable(self, states: np.ndarray) -> np.ndarray:
        """Probability of returning to ``|0...0>`` on the cluster after undoing the prep."""
        n = self.h.n_qubits
        back = self.prep.inverse().apply(states, n)
        back = np.atleast_2d(back)
        return np.array([marginal_probabilities(s, self.cluster, n)[0] for s in back])


def deviation_setup(h: LowIntersectionHamiltonian, t: float, gamma: Sequence[str] = ("Z", "Z"),
                    with_ensemble: bool = True) -> DeviationSetup:
    """First cluster of color 0 prepared in an equal superposition of two
    eigenstates of the chosen basis; the reference is evolution under the
    isolated diagonal Hamiltonian."""
    coloring = build_cluster_graph_and_color(build_clusters(h))
    gammas = {C: tuple(gamma[:len(C)]) for C in coloring.color_class(0)}
    d = TwirlDistribution.for_color(h.n_qubits, coloring, 0, gammas)
    ens = None
    if with_ensemble:
        ens = build_trotter_ensemble(h, coloring, build_qubit_graph_and_color(h, coloring, 0), gammas)
    cluster = coloring.color_class(0)[0]
    m = len(cluster)
    xi2 = (1,) + (0,) * (m - 1)
    prep = build_prep_pair(cluster, gammas[cluster], (0,) * m, xi2).U
    setup = DeviationSetup(h, cluster, d, ens, prep, 0.0)
    ideal_state = evolve_exact(setup.initial_state(), effective_hamiltonian(h, d), t)
    setup.ideal = float(setup.observable(ideal_state)[0])
    return setup


def qdrift_deviation(setup: DeviationSetup, t: float, r: int, n_sequences: int,
                     rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo deviation of the sequence-averaged observable and its standard error."""
    states = qdrift_evolve(setup.initial_state(n_sequences), setup.h, setup.distribution, t, r, rng)
    vals = setup.observable(states)
    return abs(vals.mean() - setup.ideal), vals.std(ddof=1) / math.sqrt(n_sequences)


def trotter_deviation(setup: DeviationSetup, t: float, r: int) -> float:
    state = trotter_evolve(setup.initial_state(), setup.h, setup.ensemble, t, r)
    return abs(float(setup.observable(state)[0]) - setup.ideal)


def deviation_study(config: RunConfig, backend: str | None = None) -> StudyReport:
    backend = backend or config.backend
    rng = np.random.default_rng(config.seed)
    rows = []
    t = config.t
    tol = (-1.2, -0.8) if backend == "qdrift" else (-2.2, -1.8)

    def measure(setup, r):
        if backend == "qdrift":
            return qdrift_deviation(setup, t, r, config.n_sequences, rng)
        return trotter_deviation(setup, t, r), 0.0

    h = config.build_hamiltonian()
    setup = deviation_setup(h, t, config.gamma, with_ensemble=backend == "trotter")
    for r in config.r_list:
        dev, err = measure(setup, r)
        rows.append(["r_sweep", h.n_qubits, r, dev, err])
    slope, ci = fit_loglog(config.r_list, [row[3] for row in rows])

    size_devs = []
    for n in config.n_list:
        hn = config.build_hamiltonian(n_qubits=n)
        s = deviation_setup(hn, t, config.gamma, with_ensemble=backend == "trotter")
        dev, err = measure(s, config.fixed_r)
        size_devs.append(dev)
        rows.append(["n_sweep", n, config.fixed_r, dev, err])
    checks = {"backend": backend}
    size_ok = True
    if size_devs:
        ratio = max(size_devs) / min(size_devs) if min(size_devs) > 0 else math.inf
        checks["size_ratio"] = ratio
        size_ok = ratio < 2.0
    passed = tol[0] <= slope <= tol[1] and size_ok
    return StudyReport(f"deviation_{backend}", ["sweep", "n_qubits", "r", "deviation", "stderr"],
                       rows, slope, ci, tol, passed, checks, config.to_dict())


# --------------------------------------------------------------------------
# Learning studies

def _learn_once(h: LowIntersectionHamiltonian, config: RunConfig, epsilon: float, delta: float,
                seed: int, eta_meas: float | None = None, backend: str | None = None):
    noise = NoiseModel(eta_meas=config.eta_meas if eta_meas is None else eta_meas,
                       eta_prep=config.eta_prep)
    dev = SimulatedDevice(h, noise, seed=seed, max_qubits=config.n_cap)
    res = learn_all(dev, h.paulis, epsilon, delta, backend=backend or config.backend, seed=seed)
    return res, res.max_error(h)


def scaling_study(config: RunConfig, backend: str | None = None) -> StudyReport:
    eps_list = sorted(config.eps_list, reverse=True)
    if len(eps_list) < 4:
        raise ValueError("scaling study needs at least 4 accuracy values")
    h = config.build_hamiltonian()
    rows = []
    for eps in eps_list:
        res, err = _learn_once(h, config, eps, config.delta, config.seed, backend=backend)
        rows.append(["epsilon", eps, config.delta, res.ledger.total_evolution_time,
                     res.ledger.experiment_count, err, int(err <= eps)])
    for delta in config.delta_list:
        res, err = _learn_once(h, config, config.epsilon, delta, config.seed, backend=backend)
        rows.append(["delta", config.epsilon, delta, res.ledger.total_evolution_time,
                     res.ledger.experiment_count, err, int(err <= config.epsilon)])
    eps_rows = [r for r in rows if r[0] == "epsilon"]
    slope, ci = fit_loglog([1 / r[1] for r in eps_rows], [r[3] for r in eps_rows])
    count_ratio = eps_rows[-1][4] / eps_rows[0][4]
    tol = (0.8, 1.2)
    checks = {"experiment_ratio": count_ratio, "all_within_epsilon": all(r[6] for r in eps_rows)}
    passed = tol[0] <= slope <= tol[1] and count_ratio <= 4 and checks["all_within_epsilon"]
    return StudyReport("scaling", ["sweep", "epsilon", "delta", "total_time", "experiments",
                                   "max_error", "success"],
                       rows, slope, ci, tol, passed, checks, config.to_dict())


def binomial_floor(p: float, n: int, sigmas: float = 2.0) -> float:
    return p - sigmas * math.sqrt(p * (1 - p) / n)


def spam_robustness_study(config: RunConfig, backend: str | None = None,
                          eps_dev: float = 0.1) -> StudyReport:
    """Success rate versus measurement depolarization.

    Grid points whose combined perturbation (SPAM plus the reshaping budget)
    stays below ``1/sqrt(8)`` must reach ``1 - delta`` within two binomial
    standard deviations; the others are recorded only.
    """
    if any(not 0 <= e <= 0.5 for e in config.eta_list):
        raise ValueError("noise grid must lie in [0, 0.5]")
    h = config.build_hamiltonian()
    rows = []
    ok = True
    floor = binomial_floor(1 - config.delta, config.runs)
    for eta in config.eta_list:
        wins = 0
        worst = 0.0
        for run in range(config.runs):
            _, err = _learn_once(h, config, config.epsilon, config.delta,
                                 seed=config.seed * 100003 + run, eta_meas=eta, backend=backend)
            wins += err <= config.epsilon
            worst = max(worst, err)
        rate = wins / config.runs
        claimed = eta + config.eta_prep + eps_dev < 1 / math.sqrt(8)
        if claimed:
            ok &= rate >= floor
        rows.append([eta, config.runs, rate, worst, int(claimed)])
    return StudyReport("spam", ["eta_meas", "runs", "success_rate", "worst_error", "asserted"],
                       rows, None, None, None, ok, {"success_floor": floor}, config.to_dict())


# --------------------------------------------------------------------------
# Single-experiment distinguishability

def _single_shot_distribution(sign: int, eps: float, t: float, eta: float, basis: str) -> np.ndarray:
    """Outcome distribution for ``H = sign*eps*Z`` acting on ``|+>`` for time ``t``,
    read out in the X or Y basis through a depolarizing measurement."""
    plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
    phases = np.exp(-1j * sign * eps * t * np.array([1, -1]))
    psi = phases * plus
    if basis == "X":
        vecs = [np.array([1, 1]) / math.sqrt(2), np.array([1, -1]) / math.sqrt(2)]
    else:
        vecs = [np.array([1, 1j]) / math.sqrt(2), np.array([1, -1j]) / math.sqrt(2)]
    p = np.array([abs(np.vdot(v, psi)) ** 2 for v in vecs])
    return (1 - eta) * p + eta / 2


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def time_lower_bound(epsilon: float, delta: float, eta: float) -> float:
    """Reference total time ``log(1/(2 delta)) / (2 epsilon log(1/eta))``."""
    if not 0 < eta < 1:
        return math.inf
    return math.log(1 / (2 * delta)) / (2 * epsilon * math.log(1 / eta))


def tv_bound_check(epsilons: Sequence[float], times: Sequence[float], etas: Sequence[float],
                   delta: float = 0.01, config: dict | None = None) -> StudyReport:
    """Total-variation distance between the outcome laws of ``H = +eps Z`` and
    ``H = -eps Z`` against ``(1 - eta) * min(2 eps t, 1)`` on a product grid."""
    rows = []
    violations = 0
    for eps, t, eta in itertools.product(epsilons, times, etas):
        tv = max(tv_distance(_single_shot_distribution(+1, eps, t, eta, b),
                             _single_shot_distribution(-1, eps, t, eta, b)) for b in ("X", "Y"))
        bound = (1 - eta) * min(2 * eps * t, 1.0)
        ok = tv <= bound + 1e-12
        violations += not ok
        rows.append([eps, t, eta, tv, bound, int(ok), time_lower_bound(eps, delta, eta)])
    return StudyReport("tvbound", ["epsilon", "t", "eta", "tv", "bound", "ok", "time_lower_bound"],
                       rows, None, None, None, violations == 0, {"violations": violations},
                       config or {"epsilons": list(epsilons), "times": list(times),
                                  "etas": list(etas), "delta": delta})


def tv_study(config: RunConfig) -> StudyReport:
    return tv_bound_check(config.tv_epsilons, config.tv_times, config.tv_etas, config.tv_delta,
                          config.to_dict())
