"""Dense simulation of the unknown dynamics and of Pauli-interleaved evolution.

Conventions: qubit 0 is the most significant bit of a basis-state index (the
usual Kronecker order), so a Pauli mask bit ``q`` maps to index bit ``n-1-q``.
States are complex arrays of length ``2**n``; a 2-D array is a stack of
independent states along the first axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .circuits import GATES, ProductCircuit
from .hamiltonian import Cluster, LowIntersectionHamiltonian
from .pauli import PauliString
from .reshape import TrotterEnsemble, TwirlDistribution

DEFAULT_MAX_QUBITS = 14
DENSE_MAX_QUBITS = 10
EXACT_CHANNEL_MAX_QUBITS = 5  # reduced transfer matrix has 4**|A| rows


# --------------------------------------------------------------------------
# Pauli action in index space

def _index_mask(mask: int | np.ndarray, n: int):
    """Move Pauli-mask bits (qubit q at bit q) to index bits (qubit q at bit n-1-q)."""
    if isinstance(mask, np.ndarray):
        out = np.zeros_like(mask)
        for q in range(n):
            out |= ((mask >> q) & 1) << (n - 1 - q)
        return out
    out = 0
    for q in range(n):
        if (mask >> q) & 1:
            out |= 1 << (n - 1 - q)
    return out


def _pauli_phase(idx: np.ndarray, xi, zi, n_y):
    """Phase of ``P|idx>`` with ``P = i^{nY} X^x Z^z``."""
    sign = 1 - 2 * (np.bitwise_count(idx & zi) & 1).astype(np.int8)
    return (1j ** (np.asarray(n_y) % 4)) * sign


def pauli_matrix_sparse(p: PauliString) -> sp.csr_matrix:
    n = p.n_qubits
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    xi, zi = _index_mask(p.x, n), _index_mask(p.z, n)
    vals = _pauli_phase(idx, zi=zi, xi=xi, n_y=(p.x & p.z).bit_count())
    return sp.csr_matrix((vals, (idx ^ xi, idx)), shape=(dim, dim))


def hamiltonian_matrix(h: LowIntersectionHamiltonian, dense: bool = False):
    dim = 1 << h.n_qubits
    mat = sp.csr_matrix((dim, dim), dtype=complex)
    for p, c in h.terms:
        mat = mat + c * pauli_matrix_sparse(p)
    return mat.toarray() if dense else mat.tocsr()


def apply_pauli_layer(state: np.ndarray, p: PauliString) -> np.ndarray:
    """Exact ``P|psi>`` by index permutation and phase."""
    n = p.n_qubits
    state = np.asarray(state)
    if state.shape[-1] != 1 << n:
        raise ValueError("state dimension does not match the Pauli string")
    idx = np.arange(1 << n, dtype=np.int64)
    xi, zi = _index_mask(p.x, n), _index_mask(p.z, n)
    src = idx ^ xi
    return state[..., src] * _pauli_phase(src, xi, zi, (p.x & p.z).bit_count())


def apply_pauli_masks(states: np.ndarray, x: np.ndarray, z: np.ndarray, n: int) -> np.ndarray:
    """Apply a different Pauli (given by mask arrays) to each row of ``states``."""
    idx = np.arange(1 << n, dtype=np.int64)
    xi = _index_mask(np.asarray(x, dtype=np.int64), n)[:, None]
    zi = _index_mask(np.asarray(z, dtype=np.int64), n)[:, None]
    n_y = np.bitwise_count(np.asarray(x) & np.asarray(z)).astype(np.int64)[:, None]
    src = idx[None, :] ^ xi
    return np.take_along_axis(states, src, axis=1) * _pauli_phase(src, xi, zi, n_y)


# --------------------------------------------------------------------------
# Exact evolution

@lru_cache(maxsize=16)
def _spectrum(h: LowIntersectionHamiltonian):
    return np.linalg.eigh(hamiltonian_matrix(h, dense=True))


def propagator(h: LowIntersectionHamiltonian, t: float) -> np.ndarray:
    """Dense ``exp(-iHt)``; only for small registers."""
    if h.n_qubits > DENSE_MAX_QUBITS:
        raise ValueError(f"dense propagator limited to {DENSE_MAX_QUBITS} qubits")
    evals, evecs = _spectrum(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def _check_cap(h: LowIntersectionHamiltonian, max_qubits: int):
    if h.n_qubits > max_qubits:
        raise ValueError(f"{h.n_qubits} qubits exceeds the simulation cap of {max_qubits}")


def evolve_exact(state: np.ndarray, h: LowIntersectionHamiltonian, t: float,
                 max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """``exp(-iHt)`` applied to a state or a stack of states."""
    _check_cap(h, max_qubits)
    state = np.asarray(state, dtype=complex)
    if t == 0 or not h.terms:
        return state.copy()
    if h.n_qubits <= DENSE_MAX_QUBITS:
        evals, evecs = _spectrum(h)
        coeffs = state @ evecs.conj()
        return (coeffs * np.exp(-1j * evals * t)) @ evecs.T
    mat = hamiltonian_matrix(h)
    return expm_multiply(-1j * t * mat, state.T).T


class _Stepper:
    """Applies ``exp(-iH tau)`` for a fixed ``tau``, reusing a dense propagator when possible."""

    def __init__(self, h: LowIntersectionHamiltonian, tau: float):
        self.h, self.tau = h, tau
        self.u = propagator(h, tau) if h.n_qubits <= DENSE_MAX_QUBITS else None

    def __call__(self, state: np.ndarray) -> np.ndarray:
        if self.u is not None:
            return state @ self.u.T
        return evolve_exact(state, self.h, self.tau)


def qdrift_evolve(state: np.ndarray, h: LowIntersectionHamiltonian, d: TwirlDistribution,
                  t: float, r: int, rng: np.random.Generator, ledger: ExperimentLedger | None = None,
                  max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """Randomly twirled evolution ``prod_j P_j exp(-iH t/r) P_j``.

    Each row of a stacked input gets its own independent Pauli sequence.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    _check_cap(h, max_qubits)
    n = h.n_qubits
    state = np.asarray(state, dtype=complex)
    single = state.ndim == 1
    out = np.atleast_2d(state).copy()
    step = _Stepper(h, t / r)
    for _ in range(r):
        x, z = d.sample_masks(rng, out.shape[0])
        out = apply_pauli_masks(out, x, z, n)
        out = step(out)
        out = apply_pauli_masks(out, x, z, n)
    if ledger is not None:
        ledger.charge(t, shots=out.shape[0], layers=r + 1)
    return out[0] if single else out


def trotter_unitary(h: LowIntersectionHamiltonian, e: TrotterEnsemble, tau: float) -> np.ndarray:
    """Dense unitary of one palindromic step of duration ``tau``."""
    seg = tau / (2 * len(e.paulis))
    u = propagator(h, seg)
    n = h.n_qubits
    ident = np.eye(1 << n, dtype=complex)
    step = ident
    for p in list(e.paulis) + list(e.paulis[::-1]):
        pm = apply_pauli_layer(ident, p).T  # columns are P|j>
        step = pm @ u @ pm @ step
    return step


def trotter_evolve(state: np.ndarray, h: LowIntersectionHamiltonian, e: TrotterEnsemble,
                   t: float, r: int, ledger: ExperimentLedger | None = None,
                   max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """Deterministic second-order reshaped evolution: ``r`` steps of duration ``t/r``."""
    if r < 1:
        raise ValueError("r must be at least 1")
    _check_cap(h, max_qubits)
    state = np.asarray(state, dtype=complex)
    n_layers = 2 * len(e.paulis) * r + 1
    if h.n_qubits <= DENSE_MAX_QUBITS:
        w = np.linalg.matrix_power(trotter_unitary(h, e, t / r), r)
        out = state @ w.T
    else:
        seg = t / (2 * r * len(e.paulis))
        out = state.copy()
        order = list(e.paulis) + list(e.paulis[::-1])
        for _ in range(r):
            for p in order:
                out = apply_pauli_layer(evolve_exact(apply_pauli_layer(out, p), h, seg, max_qubits), p)
    if ledger is not None:
        ledger.charge(t, shots=1 if state.ndim == 1 else state.shape[0], layers=n_layers)
    return out


# --------------------------------------------------------------------------
# Noise, measurement, bookkeeping

@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing SPAM noise applied independently to each cluster."""

    eta_meas: float = 0.0
    eta_prep: float = 0.0

    def __post_init__(self):
        for name in ("eta_meas", "eta_prep"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")

    @property
    def robust(self) -> bool:
        return self.eta_meas + self.eta_prep < 1 / math.sqrt(8)


def marginal_probabilities(state: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Computational-basis marginal of ``qubits`` (in the given order)."""
    probs = np.abs(np.asarray(state)) ** 2
    probs = probs.reshape((2,) * n)
    rest = tuple(q for q in range(n) if q not in qubits)
    marg = probs.sum(axis=rest) if rest else probs
    kept = sorted(qubits)
    marg = np.transpose(marg, [kept.index(q) for q in qubits])
    return marg.reshape(-1)


def _bits(index: np.ndarray, width: int) -> np.ndarray:
    index = np.asarray(index)
    return ((index[..., None] >> np.arange(width - 1, -1, -1)) & 1).astype(np.uint8)


def measure_cluster(state: np.ndarray, cluster: Sequence[int], basis: ProductCircuit | None,
                    noise: NoiseModel, rng: np.random.Generator, n_qubits: int | None = None,
                    shots: int | None = None) -> np.ndarray:
    """Rotate by ``basis`` on the cluster, sample its computational-basis bits, then
    replace the outcome by uniform bits with probability ``eta_meas``."""
    state = np.asarray(state)
    n = n_qubits if n_qubits is not None else int(round(math.log2(state.shape[-1])))
    cluster = tuple(cluster)
    if basis is not None:
        state = basis.apply(state, n)
    probs = marginal_probabilities(state, cluster, n)
    probs = probs / probs.sum()
    size = 1 if shots is None else shots
    out = _bits(rng.choice(len(probs), size=size, p=probs), len(cluster))
    if noise.eta_meas > 0:
        hit = rng.random(size) < noise.eta_meas
        out[hit] = rng.integers(0, 2, size=(int(hit.sum()), len(cluster)), dtype=np.uint8)
    return out[0] if shots is None else out


@dataclass
class ExperimentLedger:
    """Running totals over executed shots; Pauli layers cost no evolution time."""

    total_evolution_time: float = 0.0
    experiment_count: int = 0
    pauli_layer_count: int = 0

    def charge(self, t: float, shots: int = 1, layers: int = 0):
        self.total_evolution_time += abs(t) * shots
        self.experiment_count += shots
        self.pauli_layer_count += layers * shots

    def merge(self, other: ExperimentLedger) -> ExperimentLedger:
        return ExperimentLedger(self.total_evolution_time + other.total_evolution_time,
                                self.experiment_count + other.experiment_count,
                                self.pauli_layer_count + other.pauli_layer_count)

    __add__ = merge

    def to_dict(self) -> dict:
        return {"total_evolution_time": self.total_evolution_time,
                "experiment_count": self.experiment_count,
                "pauli_layer_count": self.pauli_layer_count}


@dataclass(frozen=True)
class ExperimentPlan:
    """One experiment: prepare clusters, run reshaped evolution, measure clusters.

    ``prep`` maps clusters to circuits acting on ``|0...0>``; unlisted qubits
    start in ``|0>``.  ``measure`` maps the read-out clusters to the circuit
    applied before the computational-basis measurement.
    """

    distribution: TwirlDistribution
    t: float
    r: int
    prep: tuple[tuple[Cluster, ProductCircuit], ...] = ()
    measure: tuple[tuple[Cluster, ProductCircuit], ...] = ()
    backend: str = "qdrift"
    ensemble: TrotterEnsemble | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("evolution time must be non-negative")
        if self.r < 1:
            raise ValueError("segment count must be at least 1")
        if self.backend not in ("qdrift", "trotter"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "trotter" and self.ensemble is None:
            raise ValueError("trotter backend needs an ensemble")

    @property
    def color(self):
        return self.distribution.color

    @property
    def measured_clusters(self) -> tuple[Cluster, ...]:
        return tuple(C for C, _ in self.measure)

    def layers_per_shot(self) -> int:
        if self.backend == "qdrift":
            return self.r + 1
        return 2 * len(self.ensemble.paulis) * self.r + 1

    def evolution_key(self):
        return (self.distribution, self.t, self.r, self.prep, self.backend, self.ensemble)


# --------------------------------------------------------------------------
# Reduced-register helpers

def _pauli_stack(m: int) -> np.ndarray:
    """All ``4**m`` Pauli matrices on m qubits, digit order IXYZ, first qubit most significant."""
    singles = [GATES[ch] for ch in "IXYZ"]
    stack = np.ones((1, 1, 1), dtype=complex)
    for _ in range(m):
        stack = np.einsum("aij,bkl->abikjl", stack, np.array(singles)).reshape(
            stack.shape[0] * 4, stack.shape[1] * 2, stack.shape[2] * 2)
    return stack


_pauli_stack = lru_cache(maxsize=8)(_pauli_stack)

_LETTER_BITS = np.array([(0, 0), (1, 0), (1, 1), (0, 1)])  # I X Y Z as (x, z)


def _twirl_mask(qubit_gammas: Sequence[str | None]) -> np.ndarray:
    """0/1 matrix over Pauli pairs: 1 iff the product lies in {I, gamma} on every qubit."""
    full = np.ones((1, 1))
    for g in qubit_gammas:
        local = np.ones((4, 4))
        if g is not None:
            gx, gz = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}[g]
            for a in range(4):
                for b in range(4):
                    px, pz = _LETTER_BITS[a] ^ _LETTER_BITS[b]
                    local[a, b] = float((px, pz) in ((0, 0), (gx, gz)))
        full = np.kron(full, local)
    return full


def _coset_labels(qubit_gammas: Sequence[str]) -> np.ndarray:
    """For each Pauli index, bit i is set when letter i lies outside {I, gamma_i}."""
    labels = np.zeros(1, dtype=np.int64)
    m = len(qubit_gammas)
    for i, g in enumerate(qubit_gammas):
        outside = np.array([ch not in ("I", g) for ch in "IXYZ"], dtype=np.int64)
        labels = (labels[:, None] | (outside[None, :] << (m - 1 - i))).reshape(-1)
    return labels


def _masked_power_apply(r_mat: np.ndarray, qubit_gammas: Sequence[str], power: int,
                        a0: np.ndarray) -> np.ndarray:
    """``((R * mask).T ** power) @ a0``.

    The twirl mask only connects Pauli pairs whose product is in {I, gamma}
    on every qubit, i.e. pairs in the same per-qubit coset, so the masked
    matrix splits into ``2**m`` blocks of size ``2**m`` that are powered
    independently.
    """
    m = len(qubit_gammas)
    labels = _coset_labels(qubit_gammas)
    order = np.argsort(labels, kind="stable").reshape(1 << m, 1 << m)
    blocks = r_mat[order[:, :, None], order[:, None, :]]  # [block, s', s]
    powered = np.linalg.matrix_power(np.swapaxes(blocks, 1, 2), power)
    out = np.empty_like(a0)
    out[order] = np.einsum("kij,kj->ki", powered, a0[order])
    return out


def _product_density(n: int, parts: Sequence[tuple[Sequence[int], np.ndarray]]) -> np.ndarray:
    """Density matrix on ``n`` qubits (0..n-1) from disjoint local blocks."""
    order = [q for qs, _ in parts for q in qs]
    rho = reduce(np.kron, (m for _, m in parts), np.eye(1, dtype=complex))
    perm = [order.index(q) for q in range(n)]
    rho = rho.reshape((2,) * (2 * n)).transpose(perm + [n + p for p in perm])
    return rho.reshape(1 << n, 1 << n)


def _partial_trace_keep(rho: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    keep = list(keep)
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n)).transpose(keep + drop + [n + q for q in keep] + [n + q for q in drop])
    da, dd = 1 << len(keep), 1 << len(drop)
    return np.einsum("ifjf->ij", t.reshape(da, dd, da, dd))


# --------------------------------------------------------------------------
# Device

class SimulatedDevice:
    """Stand-in for the quantum device holding the hidden Hamiltonian.

    Shots of a plan are independent: each qDRIFT shot uses a fresh Pauli
    sequence.  By default outcome probabilities are computed exactly from the
    sequence-averaged channel restricted to the constrained qubits, which is
    closed because every other qubit is fully twirled; shots are then drawn
    from that distribution.  ``method="trajectory"`` simulates every shot's
    sequence on a state vector instead.
    """

    def __init__(self, h: LowIntersectionHamiltonian, noise: NoiseModel | None = None,
                 seed: int | None = None, max_qubits: int = DEFAULT_MAX_QUBITS,
                 method: str = "auto"):
        _check_cap(h, max_qubits)
        if method not in ("auto", "exact", "trajectory"):
            raise ValueError(f"unknown method {method!r}")
        self._h = h
        self.n_qubits = h.n_qubits
        self.noise = noise or NoiseModel()
        self.rng = np.random.default_rng(seed)
        self.max_qubits = max_qubits
        self.method = method
        self.ledger = ExperimentLedger()
        self._reduced_cache: dict = {}
        self._transfer_cache: dict = {}

    # -- public API ---------------------------------------------------------
    def run(self, plan: ExperimentPlan, shots: int) -> dict[Cluster, np.ndarray]:
        """Execute ``shots`` independent repetitions; returns per-cluster bit arrays."""
        if shots < 1:
            raise ValueError("shots must be positive")
        rng = np.random.default_rng(plan.seed) if plan.seed is not None else self.rng
        if self._use_trajectories(plan):
            out = self._run_trajectories(plan, shots, rng)
        else:
            probs = self.outcome_distribution(plan)
            flat = probs.reshape(-1)
            idx = rng.choice(flat.size, size=shots, p=flat / flat.sum())
            widths = [len(C) for C in plan.measured_clusters]
            bits = _bits(idx, sum(widths))
            out, start = {}, 0
            for C, w in zip(plan.measured_clusters, widths):
                out[C] = bits[:, start:start + w]
                start += w
        self.ledger.charge(plan.t, shots=shots, layers=plan.layers_per_shot())
        return out

    def run_shot(self, plan: ExperimentPlan) -> dict[Cluster, np.ndarray]:
        return {C: b[0] for C, b in self.run(plan, 1).items()}

    def outcome_distribution(self, plan: ExperimentPlan) -> np.ndarray:
        """Exact joint outcome probabilities of the measured clusters, noise included.

        Axis ``i`` of the result indexes the bit string of ``plan.measure[i]``.
        """
        region, rho = self._reduced_state(plan)
        meas_qubits = [q for C in plan.measured_clusters for q in C]
        if not meas_qubits:
            return np.ones(())
        if not set(meas_qubits) <= set(region):
            raise ValueError("measured qubits must belong to the clusters of the plan")
        local = {q: np.eye(2, dtype=complex) for q in region}
        for C, circ in plan.measure:
            for q in C:
                local[q] = circ.local_matrix(q)
        w = reduce(np.kron, (local[q] for q in region), np.eye(1, dtype=complex))
        diag = np.real(np.einsum("ij,jk,ik->i", w, rho, w.conj()))
        diag = np.clip(diag, 0.0, None)
        m = len(region)
        probs = diag.reshape((2,) * m)
        rest = tuple(i for i, q in enumerate(region) if q not in meas_qubits)
        if rest:
            probs = probs.sum(axis=rest)
        kept = [q for q in region if q in meas_qubits]
        probs = np.transpose(probs, [kept.index(q) for q in meas_qubits])
        probs = probs.reshape([1 << len(C) for C in plan.measured_clusters])
        probs = probs / probs.sum()
        eta = self.noise.eta_meas
        if eta > 0:
            for ax in range(probs.ndim):
                probs = (1 - eta) * probs + eta * probs.mean(axis=ax, keepdims=True)
        return probs

    # -- internals ----------------------------------------------------------
    def _use_trajectories(self, plan: ExperimentPlan) -> bool:
        if self.method == "trajectory":
            if plan.backend != "qdrift":
                raise ValueError("trajectory method only applies to the qdrift backend")
            return True
        if plan.backend == "trotter":
            if self.n_qubits > DENSE_MAX_QUBITS:
                raise ValueError("trotter device limited to dense registers")
            return False
        d = plan.distribution
        covered = set(q for C in d.clusters for q in C) | set(d.free)
        feasible = (len(covered) == self.n_qubits and self.n_qubits <= DENSE_MAX_QUBITS
                    and sum(len(C) for C in d.clusters) <= EXACT_CHANNEL_MAX_QUBITS)
        if self.method == "exact" and not feasible:
            raise ValueError("exact averaged channel is not available for this plan")
        return not feasible

    def _initial_blocks(self, plan: ExperimentPlan, region: Sequence[int]):
        eta = self.noise.eta_prep
        blocks, covered = [], set()
        for C, circ in plan.prep:
            psi = circ.matrix(C)[:, 0]
            rho = np.outer(psi, psi.conj())
            if eta > 0:
                rho = (1 - eta) * rho + eta * np.eye(len(psi)) / len(psi)
            blocks.append((C, rho))
            covered |= set(C)
        zero = np.array([[1, 0], [0, 0]], dtype=complex)
        for q in region:
            if q not in covered:
                blocks.append(((q,), zero))
        return blocks

    def _reduced_state(self, plan: ExperimentPlan):
        key = plan.evolution_key()
        if key in self._reduced_cache:
            return self._reduced_cache[key]
        d = plan.distribution
        region = sorted(q for C in d.clusters for q in C)
        if any(not set(C) <= set(region) for C, _ in plan.prep):
            raise ValueError("prepared clusters must belong to the plan's clusters")
        m = len(region)
        blocks = self._initial_blocks(plan, region)
        local_pos = {q: i for i, q in enumerate(region)}
        rho0 = _product_density(m, [(tuple(local_pos[q] for q in qs), b) for qs, b in blocks])
        if plan.backend == "trotter":
            n = self.n_qubits
            free = [q for q in range(n) if q not in region]
            zero = np.array([[1, 0], [0, 0]], dtype=complex)
            full = _product_density(n, [(tuple(region), rho0)] + [((q,), zero) for q in free])
            w = np.linalg.matrix_power(trotter_unitary(self._h, plan.ensemble, plan.t / plan.r), plan.r)
            rho = _partial_trace_keep(w @ full @ w.conj().T, region, n)
        else:
            paulis = _pauli_stack(m)
            a0 = np.real(np.einsum("sij,ji->s", paulis, rho0))
            gam = {q: g for C, gs in zip(d.clusters, d.gammas) for q, g in zip(C, gs)}
            step = self._transfer(tuple(region), plan.t / plan.r)
            a = _masked_power_apply(step, [gam[q] for q in region], plan.r, a0)
            rho = np.einsum("s,sij->ij", a, paulis) / (1 << m)
        self._reduced_cache[key] = (region, rho)
        if len(self._reduced_cache) > 4096:
            self._reduced_cache.clear()
        return region, rho

    def _transfer(self, region: tuple[int, ...], tau: float) -> np.ndarray:
        """``R[s', s] = Tr[(s' x I) U^dag (s x I) U] / 2^n`` over Paulis on ``region``."""
        key = (region, tau)
        if key in self._transfer_cache:
            return self._transfer_cache[key]
        n = self.n_qubits
        u = propagator(self._h, tau)
        rest = [q for q in range(n) if q not in region]
        perm = list(region) + rest
        na, nf = 1 << len(region), 1 << len(rest)
        ut = u.reshape((2,) * (2 * n)).transpose(perm + [n + p for p in perm]).reshape(na, nf, na, nf)
        # x[(b, a), (g, f)] = U[b g, a f]
        x = ut.transpose(0, 2, 1, 3).reshape(na * na, nf * nf)
        g = (x.conj() @ x.T).reshape(na, na, na, na)  # [b, a, b', a']
        paulis = _pauli_stack(len(region))
        tmp = np.einsum("sbc,bacd->sad", paulis, g)
        r_mat = np.real(np.einsum("tda,sad->ts", paulis, tmp)) / (1 << n)
        if len(self._transfer_cache) > 64:
            self._transfer_cache.clear()
        self._transfer_cache[key] = r_mat
        return r_mat

    def _run_trajectories(self, plan: ExperimentPlan, shots: int,
                          rng: np.random.Generator) -> dict[Cluster, np.ndarray]:
        n = self.n_qubits
        d = plan.distribution
        eta = self.noise.eta_prep
        states = np.zeros((shots, 1 << n), dtype=complex)
        states[:, 0] = 1.0
        for C, circ in plan.prep:
            noisy = rng.random(shots) < eta if eta > 0 else np.zeros(shots, bool)
            # a depolarized cluster is replaced by a uniformly random basis state
            for q in C:
                flip = noisy & (rng.random(shots) < 0.5)
                if flip.any():
                    states[flip] = apply_pauli_layer(states[flip], PauliString.from_letters(n, {q: "X"}))
            clean = ~noisy
            if clean.any():
                states[clean] = circ.apply(states[clean], n)
        states = qdrift_evolve(states, self._h, d, plan.t, plan.r, rng, max_qubits=self.max_qubits)
        for _, circ in plan.measure:
            states = circ.apply(states, n)
        qubits = [q for C in plan.measured_clusters for q in C]
        out = {C: np.empty((shots, len(C)), dtype=np.uint8) for C in plan.measured_clusters}
        for i in range(shots):
            probs = marginal_probabilities(states[i], qubits, n)
            bits = _bits(rng.choice(probs.size, p=probs / probs.sum()), len(qubits))
            start = 0
            for C in plan.measured_clusters:
                chunk = bits[start:start + len(C)]
                if self.noise.eta_meas > 0 and rng.random() < self.noise.eta_meas:
                    chunk = rng.integers(0, 2, size=len(C), dtype=np.uint8)
                out[C][i] = chunk
                start += len(C)
        return out
