"""End-to-end coefficient learning.

For every color class of clusters and every Pauli eigenbasis of a cluster,
the reshaped dynamics is diagonal, with eigenvalues given by a Hadamard
transform of the diagonal coefficients.  Differences of eigenvalues along
the edges of a shortest-path tree of the cluster's hypercube are measured by
phase estimation on two-state superpositions; summing them along tree paths
gives the spectrum (up to a global shift) and the inverse transform gives
the coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuits import EIGENBASIS_ROTATION, ProductCircuit
from .hamiltonian import (Bits, Cluster, ClusterColoring, LowIntersectionHamiltonian,
                          QubitColoring, all_bitstrings, basis_assignments, build_cluster_graph_and_color,
                          build_clusters, build_qubit_graph_and_color)
from .pauli import PauliString
from .reshape import DEFAULT_ENSEMBLE_CAP, TwirlDistribution, build_trotter_ensemble
from .rpe import DEFAULT_BETA, PhaseEstimate, ladder_estimate, rpe_schedule
from .sim import ExperimentLedger, ExperimentPlan

Edge = tuple[Bits, Bits]


# --------------------------------------------------------------------------
# Spectrum arithmetic

def _index(bits: Bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | b
    return out


def _hadamard(m: int) -> np.ndarray:
    h1 = np.array([[1.0, 1.0], [1.0, -1.0]])
    out = np.ones((1, 1))
    for _ in range(m):
        out = np.kron(out, h1)
    return out


def eigenvalues_from_coefficients(coeffs: Mapping[Bits, float], m: int) -> dict[Bits, float]:
    """``eps[xi] = sum_b (-1)^(xi.b) coeffs[b]``; missing ``b`` count as zero."""
    vec = np.zeros(1 << m)
    for b, v in coeffs.items():
        vec[_index(b)] = v
    eps = _hadamard(m) @ vec
    return {xi: float(eps[_index(xi)]) for xi in all_bitstrings(m)}


def coefficients_from_eigenvalues(eps: Mapping[Bits, float], m: int) -> dict[Bits, float]:
    """Inverse transform ``coeffs[b] = 2^-m sum_xi (-1)^(xi.b) eps[xi]`` (all ``b``)."""
    missing = [xi for xi in all_bitstrings(m) if xi not in eps]
    if missing:
        raise ValueError(f"spectrum incomplete, missing {missing}")
    vec = np.array([eps[xi] for xi in all_bitstrings(m)])
    lam = _hadamard(m) @ vec / (1 << m)
    return {b: float(lam[_index(b)]) for b in all_bitstrings(m)}


# --------------------------------------------------------------------------
# Trees and circuits

@dataclass(frozen=True)
class SPTree:
    """Shortest-path tree of the ``|C|``-cube rooted at all zeros.

    Edges are ``(parent, child)``; a child's parent clears its lowest set bit
    (position 0 is the first cluster qubit).
    """

    cluster: Cluster
    edges: tuple[Edge, ...]

    @property
    def parent(self) -> dict[Bits, Bits]:
        return {child: par for par, child in self.edges}

    def path(self, xi: Bits) -> list[Edge]:
        """Edges from the root down to ``xi``."""
        par = self.parent
        out = []
        while any(xi):
            out.append((par[xi], xi))
            xi = par[xi]
        return out[::-1]


def build_spt(cluster: Sequence[int]) -> SPTree:
    cluster = tuple(cluster)
    if not cluster:
        raise ValueError("cluster must be non-empty")
    edges = []
    for xi in all_bitstrings(len(cluster)):
        if any(xi):
            low = xi.index(1)
            par = xi[:low] + (0,) + xi[low + 1:]
            edges.append((par, xi))
    edges.sort(key=lambda e: (sum(e[1]), e[0], e[1]))
    return SPTree(cluster, tuple(edges))


@dataclass(frozen=True)
class PrepCircuitPair:
    """``U|0> = (|xi> + |xi'>)/sqrt2`` and ``V|0> ~ (|xi> + i|xi'>)/sqrt2`` on a cluster."""

    cluster: Cluster
    gamma: tuple[str, ...]
    xi: Bits
    xi2: Bits
    U: ProductCircuit
    V: ProductCircuit


def build_prep_pair(cluster: Sequence[int], gamma: Sequence[str], xi: Bits, xi2: Bits) -> PrepCircuitPair:
    """Product Clifford circuits for a Hamming-distance-one pair.

    ``|xi>`` is the product of ``W_g|xi(q)>`` where ``W_g`` rotates the
    computational basis onto the eigenbasis of ``g`` (sign ``(-1)**xi(q)``).
    """
    cluster, gamma, xi, xi2 = tuple(cluster), tuple(gamma), tuple(xi), tuple(xi2)
    if not len(cluster) == len(gamma) == len(xi) == len(xi2):
        raise ValueError("cluster, basis and bit strings must have equal length")
    diff = [i for i, (a, b) in enumerate(zip(xi, xi2)) if a != b]
    if len(diff) != 1:
        raise ValueError("prep pairs need bit strings at Hamming distance 1")
    u_ops, v_ops = {}, {}
    for i, (q, g) in enumerate(zip(cluster, gamma)):
        rot = EIGENBASIS_ROTATION[g]
        if i == diff[0]:
            u_ops[q] = ("H",) + rot
            # relative phase +i on |xi'>; the sign flips when xi' carries the 0 bit
            v_ops[q] = ("H", "S" if xi2[i] == 1 else "Sdg") + rot
        else:
            seq = (("X",) if xi[i] else ()) + rot
            u_ops[q] = v_ops[q] = seq
    return PrepCircuitPair(cluster, gamma, xi, xi2,
                           ProductCircuit.from_mapping(u_ops), ProductCircuit.from_mapping(v_ops))


# --------------------------------------------------------------------------
# Results

@dataclass
class EdgeEstimate:
    edge: Edge
    difference: float  # eps[parent] - eps[child]
    error_bound: float
    delta: float
    phase: PhaseEstimate | None = None


@dataclass
class SpectrumTable:
    cluster: Cluster
    gamma: tuple[str, ...]
    eigenvalues: dict[Bits, float]
    differences: dict[Edge, float]
    edge_errors: dict[Edge, float] = field(default_factory=dict)

    def error_bound(self, xi: Bits) -> float:
        """Worst-case error of ``eigenvalues[xi]`` from the per-edge bounds."""
        tree = build_spt(self.cluster)
        return sum(self.edge_errors.get(e, math.nan) for e in tree.path(xi))


@dataclass
class CoefficientEstimate:
    term: PauliString
    value: float
    epsilon: float
    delta: float
    provenance: list[tuple[int | None, Cluster, tuple[str, ...]]] = field(default_factory=list)
    all_values: list[float] = field(default_factory=list)


def accumulate_spectrum(tree: SPTree, differences: Mapping[Edge, float | EdgeEstimate],
                        gamma: Sequence[str] = ()) -> SpectrumTable:
    """Root-gauge spectrum: ``eps[0] = 0`` and ``eps[child] = eps[parent] - d``."""
    diffs, errs = {}, {}
    for e in tree.edges:
        if e not in differences:
            raise ValueError(f"missing difference for edge {e}")
        v = differences[e]
        if isinstance(v, EdgeEstimate):
            diffs[e], errs[e] = v.difference, v.error_bound
        else:
            diffs[e] = float(v)
    eps = {tuple([0] * len(tree.cluster)): 0.0}
    for par, child in tree.edges:  # parents precede children
        eps[child] = eps[par] - diffs[(par, child)]
    return SpectrumTable(tree.cluster, tuple(gamma), eps, diffs, errs)


def recover_coefficients(table: SpectrumTable, structure: LowIntersectionHamiltonian | None = None,
                         epsilon: float = math.nan, delta: float = math.nan,
                         color: int | None = None) -> list[CoefficientEstimate] | dict[Bits, float]:
    """Inverse transform of a spectrum table.

    Without ``structure`` the raw map ``b -> coeff`` (``b != 0``) is returned.
    With it, each ``b`` is turned into its Pauli string and only terms of the
    structure are reported.
    """
    m = len(table.cluster)
    lam = coefficients_from_eigenvalues(table.eigenvalues, m)
    lam.pop(tuple([0] * m))
    if structure is None:
        return lam
    known = set(structure.paulis)
    out = []
    for b, v in lam.items():
        letters = {q: g for q, g, bit in zip(table.cluster, table.gamma, b) if bit}
        p = PauliString.from_letters(structure.n_qubits, letters)
        if p in known:
            out.append(CoefficientEstimate(p, float(np.clip(v, -1.0, 1.0)), epsilon, delta,
                                           [(color, table.cluster, table.gamma)], [v]))
    return out


# --------------------------------------------------------------------------
# Driver

@dataclass(frozen=True)
class LearnerConfig:
    backend: str = "qdrift"
    eps_dev: float = 0.1
    c_r_qdrift: float = 3.0
    c_r_trotter: float = 0.1
    alpha: int | None = None
    beta: float = DEFAULT_BETA
    ensemble_cap: int = DEFAULT_ENSEMBLE_CAP
    prune_bases: bool = True

    def __post_init__(self):
        if self.backend not in ("qdrift", "trotter"):
            raise ValueError(f"unknown backend {self.backend!r}")

    def segments(self, t: float) -> int:
        if t <= 0:
            return 1
        if self.backend == "qdrift":
            return max(1, math.ceil(self.c_r_qdrift * t * t / self.eps_dev))
        return max(1, math.ceil(self.c_r_trotter * t ** 1.5 / math.sqrt(self.eps_dev)))


@dataclass
class LearningResult:
    estimates: list[CoefficientEstimate]
    ledger: ExperimentLedger
    tables: list[SpectrumTable]
    multiple_time: float = 0.0  # sum over shots of multiple * tau', rebuilt from the schedules

    def __iter__(self):
        yield self.estimates
        yield self.ledger

    def as_dict(self) -> dict[str, float]:
        return {str(e.term): e.value for e in self.estimates}

    def max_error(self, truth: LowIntersectionHamiltonian) -> float:
        return max((abs(e.value - truth.coefficient(e.term)) for e in self.estimates), default=0.0)


def _structure(h) -> LowIntersectionHamiltonian:
    if isinstance(h, LowIntersectionHamiltonian):
        return h
    paulis = [PauliString.from_str(p) if isinstance(p, str) else p for p in h]
    if not paulis:
        raise ValueError("empty term set")
    return LowIntersectionHamiltonian(paulis[0].n_qubits, tuple((p, 0.0) for p in paulis))


class Learner:
    """Schedules and runs all experiments for a known term set."""

    def __init__(self, structure, config: LearnerConfig | None = None, seed=None):
        self.structure = _structure(structure)
        self.config = config or LearnerConfig()
        self.rng = np.random.default_rng(seed)
        self.k = max(1, self.structure.k)
        self.clusters = build_clusters(self.structure)
        self.coloring: ClusterColoring = build_cluster_graph_and_color(self.clusters)
        self._qcolorings: dict[int, QubitColoring] = {}

    def qcoloring(self, c: int) -> QubitColoring:
        if c not in self._qcolorings:
            self._qcolorings[c] = build_qubit_graph_and_color(self.structure, self.coloring, c)
        return self._qcolorings[c]

    def tau_prime(self, c: int) -> float:
        """Unit time of a color; uses its largest cluster so the phase stays in (-pi/2, pi/2)."""
        k_c = max(len(C) for C in self.coloring.color_class(c))
        return math.pi / 2 ** (k_c + 2)

    def useful_bases(self, cluster: Cluster) -> list[tuple[str, ...]]:
        bases = basis_assignments(cluster)
        if not self.config.prune_bases:
            return bases
        inside = [p.letters for p in self.structure.paulis if p.support <= set(cluster)]
        return [g for g in bases
                if any(all(lt[q] == g[i] for i, q in enumerate(cluster) if q in lt) for lt in inside)]

    def tasks(self, c: int) -> dict[Cluster, list[tuple[tuple[str, ...], Edge]]]:
        out = {}
        for C in self.coloring.color_class(c):
            tree = build_spt(C)
            out[C] = [(g, e) for g in self.useful_bases(C) for e in tree.edges]
        return out

    def _distribution(self, c: int, gammas: Mapping[Cluster, Sequence[str]]):
        d = TwirlDistribution.for_color(self.structure.n_qubits, self.coloring, c, gammas)
        ens = None
        if self.config.backend == "trotter":
            ens = build_trotter_ensemble(self.structure, self.coloring, self.qcoloring(c), gammas,
                                         cap=self.config.ensemble_cap)
        return d, ens

    def run_batch(self, device, c: int, active: Mapping[Cluster, tuple[Sequence[str], Edge]],
                  eps_edge: float, delta_edge: float) -> tuple[dict[Cluster, EdgeEstimate], float]:
        """One shared evolution schedule serving every active cluster of color ``c``.

        Returns the per-cluster edge estimates and the schedule's
        ``sum(shots * multiple * tau')``.
        """
        gammas = {}
        for C in self.coloring.color_class(c):
            if C in active:
                gammas[C] = tuple(active[C][0])
            else:
                gammas[C] = tuple(self.rng.choice(list("XYZ"), size=len(C)))
        d, ens = self._distribution(c, gammas)
        pairs = {C: build_prep_pair(C, gammas[C], e[0], e[1]) for C, (_, e) in active.items()}
        prep = tuple((C, pairs[C].U) for C in active)
        meas_cos = tuple((C, pairs[C].U.inverse()) for C in active)
        meas_sin = tuple((C, pairs[C].V.inverse()) for C in active)
        tau = self.tau_prime(c)
        sched = rpe_schedule(eps_edge * tau, delta_edge, self.config.alpha, self.config.beta)
        cos_counts = {C: [] for C in active}
        sin_counts = {C: [] for C in active}
        spent = 0.0
        for ell, shots in zip(sched.multiples, sched.shots):
            t = ell * tau
            r = self.config.segments(t)
            for meas, store in ((meas_cos, cos_counts), (meas_sin, sin_counts)):
                plan = ExperimentPlan(d, t, r, prep, meas, self.config.backend, ens)
                out = device.run(plan, shots)
                for C in active:
                    store[C].append(int(np.sum(~out[C].any(axis=1))))
            spent += 2 * shots * t
        result = {}
        for C, (_, e) in active.items():
            theta, angles = ladder_estimate(sched.multiples, cos_counts[C], sin_counts[C], sched.shots)
            phase = PhaseEstimate(theta, eps_edge * tau, delta_edge, sched.total_shots(),
                                  sched.total_multiple(), angles)
            result[C] = EdgeEstimate(e, theta / tau, eps_edge, delta_edge, phase)
        return result, spent

    def learn_all(self, device, epsilon: float, delta: float) -> LearningResult:
        if not 0 < epsilon < 1 or not 0 < delta < 1:
            raise ValueError("epsilon and delta must lie in (0, 1)")
        eps_edge, delta_edge = epsilon / self.k, delta / self.k
        ledger_start = ExperimentLedger() + device.ledger
        found: dict[PauliString, CoefficientEstimate] = {}
        tables = []
        spent = 0.0
        for c in range(self.coloring.n_colors):
            tasks = self.tasks(c)
            edges: dict[tuple[Cluster, tuple[str, ...]], dict[Edge, EdgeEstimate]] = {}
            n_batches = max((len(v) for v in tasks.values()), default=0)
            for i in range(n_batches):
                active = {C: v[i] for C, v in tasks.items() if i < len(v)}
                res, cost = self.run_batch(device, c, active, eps_edge, delta_edge)
                spent += cost
                for C, est in res.items():
                    edges.setdefault((C, tuple(active[C][0])), {})[est.edge] = est
            for (C, g), diffs in edges.items():
                table = accumulate_spectrum(build_spt(C), diffs, g)
                tables.append(table)
                for est in recover_coefficients(table, self.structure, epsilon, delta, c):
                    if est.term in found:
                        found[est.term].provenance += est.provenance
                        found[est.term].all_values += est.all_values
                    else:
                        found[est.term] = est
        order = {p: i for i, p in enumerate(self.structure.paulis)}
        estimates = sorted(found.values(), key=lambda e: order[e.term])
        used = ExperimentLedger(device.ledger.total_evolution_time - ledger_start.total_evolution_time,
                                device.ledger.experiment_count - ledger_start.experiment_count,
                                device.ledger.pauli_layer_count - ledger_start.pauli_layer_count)
        return LearningResult(estimates, used, tables, spent)


def learn_all(device, structure, epsilon: float, delta: float, backend: str = "qdrift",
              config: LearnerConfig | None = None, seed=None) -> LearningResult:
    cfg = config or LearnerConfig(backend=backend)
    if cfg.backend != backend:
        cfg = LearnerConfig(**{**cfg.__dict__, "backend": backend})
    return Learner(structure, cfg, seed).learn_all(device, epsilon, delta)


def estimate_edge_difference(device, structure, cluster: Sequence[int], gamma: Sequence[str],
                             edge: Edge, eps_edge: float, delta_edge: float, backend: str = "qdrift",
                             config: LearnerConfig | None = None, seed=None) -> EdgeEstimate:
    """``eps[edge[0]] - eps[edge[1]]`` for one cluster; other clusters of its color idle."""
    if eps_edge <= 0 or not 0 < delta_edge < 1:
        raise ValueError("targets must be positive")
    cfg = config or LearnerConfig(backend=backend)
    learner = Learner(structure, LearnerConfig(**{**cfg.__dict__, "backend": backend}), seed)
    cluster = tuple(sorted(cluster))
    c = learner.coloring.color_of(cluster)
    res, _ = learner.run_batch(device, c, {cluster: (tuple(gamma), tuple(map(tuple, edge)))},
                               eps_edge, delta_edge)
    return res[cluster]
