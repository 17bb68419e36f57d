"""Reshaping the dynamics: random Pauli twirls and deterministic Trotter ensembles.

Both backends conjugate short evolutions by Pauli strings so that, on
average, only the part of ``H`` diagonal in a chosen product eigenbasis of
every cluster of one color survives.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .hamiltonian import (Cluster, ClusterColoring, LowIntersectionHamiltonian,
                          QubitColoring)
from .pauli import PauliString

_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}

DEFAULT_ENSEMBLE_CAP = 2 ** 16


@dataclass(frozen=True)
class TwirlDistribution:
    """Product distribution over Pauli strings.

    Qubits of ``clusters[i]`` draw uniformly from ``{I, gammas[i][j]}``, qubits
    in ``free`` draw uniformly from ``{I, X, Y, Z}`` and any remaining qubit is
    left untouched.  The distributions used by the learner cover every qubit.
    """

    n_qubits: int
    clusters: tuple[Cluster, ...] = ()
    gammas: tuple[tuple[str, ...], ...] = ()
    free: tuple[int, ...] = ()
    color: int | None = None

    def __post_init__(self):
        if len(self.clusters) != len(self.gammas):
            raise ValueError("one basis assignment per cluster is required")
        seen: set[int] = set()
        for C, g in zip(self.clusters, self.gammas):
            if len(C) != len(g):
                raise ValueError(f"basis assignment {g} does not match cluster {C}")
            if any(ch not in "XYZ" for ch in g):
                raise ValueError(f"basis letters must be X, Y or Z, got {g}")
            if seen & set(C):
                raise ValueError("clusters of one distribution must be disjoint")
            seen |= set(C)
        if seen & set(self.free):
            raise ValueError("free qubits overlap the clusters")
        if any(not 0 <= q < self.n_qubits for q in seen | set(self.free)):
            raise ValueError("qubit index outside register")

    @classmethod
    def for_color(cls, n_qubits: int, coloring: ClusterColoring, c: int,
                  gammas: Mapping[Cluster, Sequence[str]]) -> TwirlDistribution:
        clusters = coloring.color_class(c)
        missing = [C for C in clusters if C not in gammas]
        if missing:
            raise ValueError(f"no basis assignment for clusters {missing}")
        constrained = coloring.constrained_qubits(c)
        free = tuple(q for q in range(n_qubits) if q not in constrained)
        return cls(n_qubits, clusters, tuple(tuple(gammas[C]) for C in clusters), free, c)

    @classmethod
    def identity(cls, n_qubits: int) -> TwirlDistribution:
        return cls(n_qubits)

    @classmethod
    def full_twirl(cls, n_qubits: int) -> TwirlDistribution:
        return cls(n_qubits, free=tuple(range(n_qubits)))

    def gamma_of(self, cluster: Cluster) -> tuple[str, ...]:
        return self.gammas[self.clusters.index(tuple(cluster))]

    def _masks(self):
        """(qubit, x-bit, z-bit) for cluster qubits and the list of free qubits."""
        fixed = [(q, *_XZ[g]) for C, gam in zip(self.clusters, self.gammas)
                 for q, g in zip(C, gam)]
        return fixed, list(self.free)

    def sample_masks(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``size`` Pauli strings as (x, z) bitmask arrays."""
        x = np.zeros(size, dtype=np.int64)
        z = np.zeros(size, dtype=np.int64)
        fixed, free = self._masks()
        if fixed:
            on = rng.integers(0, 2, size=(size, len(fixed)), dtype=np.int64)
            for j, (q, bx, bz) in enumerate(fixed):
                x |= (on[:, j] * bx) << q
                z |= (on[:, j] * bz) << q
        if free:
            bits = rng.integers(0, 4, size=(size, len(free)), dtype=np.int64)
            for j, q in enumerate(free):
                x |= (bits[:, j] & 1) << q
                z |= (bits[:, j] >> 1) << q
        return x, z


def sample_pauli(d: TwirlDistribution, rng: np.random.Generator) -> PauliString:
    x, z = d.sample_masks(rng, 1)
    return PauliString(d.n_qubits, int(x[0]), int(z[0]))


def survives(p: PauliString, d: TwirlDistribution) -> bool:
    """Whether ``E[P p P] = p`` (otherwise the average vanishes).

    Each qubit is drawn uniformly from a group of Paulis, so the average sign
    is 1 if ``p`` commutes with every option on every qubit and 0 otherwise.
    """
    letters = p.letters
    for C, gam in zip(d.clusters, d.gammas):
        for q, g in zip(C, gam):
            if q in letters and letters[q] != g:
                return False
    return not any(q in letters for q in d.free)


def effective_hamiltonian(h: LowIntersectionHamiltonian,
                          d: TwirlDistribution) -> LowIntersectionHamiltonian:
    """Exact average ``E[P h P]`` under ``d``, computed term by term."""
    return LowIntersectionHamiltonian(
        h.n_qubits, tuple((p, c) for p, c in h.terms if survives(p, d)))


@dataclass(frozen=True)
class TrotterEnsemble:
    """Ordered Pauli list averaged by the deterministic product formula."""

    n_qubits: int
    paulis: tuple[PauliString, ...]
    n_p: int
    n_q: int
    distribution: TwirlDistribution

    def __post_init__(self):
        if len(self.paulis) != self.n_p * self.n_q:
            raise ValueError("ensemble size must equal |P| * |Q|")

    def __len__(self):
        return len(self.paulis)

    @classmethod
    def identity(cls, n_qubits: int) -> TrotterEnsemble:
        return cls(n_qubits, (PauliString.identity(n_qubits),), 1, 1,
                   TwirlDistribution.identity(n_qubits))


def build_trotter_ensemble(h: LowIntersectionHamiltonian, coloring: ClusterColoring,
                           qcoloring: QubitColoring, gammas: Mapping[Cluster, Sequence[str]],
                           cap: int = DEFAULT_ENSEMBLE_CAP) -> TrotterEnsemble:
    """Products ``P Q`` with ``P`` a uniform letter per free-qubit color class and
    ``Q`` a shared bit pattern raising each cluster letter to power 0 or 1.

    Cluster qubits are ordered ascending; a cluster smaller than the largest
    one of its color uses the leading bits of the shared pattern.
    """
    c = qcoloring.color
    d = TwirlDistribution.for_color(h.n_qubits, coloring, c, gammas)
    n = h.n_qubits
    n_q_colors = qcoloring.n_colors
    k_c = max((len(C) for C in d.clusters), default=0)
    size = 4 ** n_q_colors * 2 ** k_c
    if size > cap:
        raise ValueError(f"Trotter ensemble of size {size} exceeds cap {cap}")

    p_list = []
    for word in itertools.product("IXYZ", repeat=n_q_colors):
        p_list.append(PauliString.from_letters(
            n, {q: word[col] for q, col in qcoloring.qubit_colors.items() if word[col] != "I"}))
    q_list = []
    for bits in itertools.product((0, 1), repeat=k_c):
        letters = {}
        for C, gam in zip(d.clusters, d.gammas):
            for i, (q, g) in enumerate(zip(C, gam)):
                if bits[i]:
                    letters[q] = g
        q_list.append(PauliString.from_letters(n, letters))
    paulis = tuple(p.times(q) for p in p_list for q in q_list)
    return TrotterEnsemble(n, paulis, len(p_list), len(q_list), d)


def trotter_step_schedule(e: TrotterEnsemble, tau: float) -> list[tuple[PauliString, float]]:
    """Second-order palindromic step of total duration ``tau``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    seg = tau / (2 * len(e.paulis))
    forward = [(p, seg) for p in e.paulis]
    return forward + forward[::-1]


def ensemble_average(h: LowIntersectionHamiltonian,
                     paulis: Sequence[PauliString]) -> LowIntersectionHamiltonian:
    """Uniform average of ``P h P`` over an explicit list; zero terms are dropped."""
    out = []
    for p, c in h.terms:
        s = sum(1 if q.commutes(p) else -1 for q in paulis) / len(paulis)
        if abs(s) > 1e-15:
            out.append((p, c * s))
    return LowIntersectionHamiltonian(h.n_qubits, tuple(out))
