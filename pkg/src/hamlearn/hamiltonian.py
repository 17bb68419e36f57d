"""Low-intersection Hamiltonians, interacting clusters and their colorings."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .pauli import PauliString

Cluster = tuple[int, ...]
Bits = tuple[int, ...]

COEFF_TOL = 1e-12


@dataclass(frozen=True)
class LowIntersectionHamiltonian:
    """``H = sum_a coeff_a * pauli_a`` on ``n_qubits`` qubits.

    Coefficients are normalised so that ``|coeff| <= 1``.  Terms are stored
    in the order given; duplicates and the identity are rejected.
    """

    n_qubits: int
    terms: tuple[tuple[PauliString, float], ...] = ()

    def __post_init__(self):
        seen = set()
        clean = []
        for p, c in self.terms:
            if p.n_qubits != self.n_qubits:
                raise ValueError(f"term {p} does not act on {self.n_qubits} qubits")
            if p.is_identity():
                raise ValueError("identity term is not allowed (it is a pure gauge)")
            if p in seen:
                raise ValueError(f"duplicate term {p}")
            c = float(c)
            if abs(c) > 1 + COEFF_TOL:
                raise ValueError(f"coefficient {c} of {p} outside [-1, 1]")
            seen.add(p)
            clean.append((p, c))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[str | PauliString, float]]):
        out = []
        for p, c in terms:
            if isinstance(p, str):
                p = PauliString.from_str(p)
            out.append((p, c))
        return cls(n_qubits, tuple(out))

    @property
    def paulis(self) -> tuple[PauliString, ...]:
        return tuple(p for p, _ in self.terms)

    @property
    def coefficients(self) -> tuple[float, ...]:
        return tuple(c for _, c in self.terms)

    @property
    def M(self) -> int:
        return len(self.terms)

    @property
    def k(self) -> int:
        return max((p.weight for p, _ in self.terms), default=0)

    @property
    def degree(self) -> int:
        """Largest number of other terms whose support overlaps a given term."""
        masks = [p.x | p.z for p in self.paulis]
        best = 0
        for i, m in enumerate(masks):
            best = max(best, sum(1 for j, o in enumerate(masks) if j != i and m & o))
        return best

    def coefficient(self, p: PauliString) -> float:
        for q, c in self.terms:
            if q == p:
                return c
        return 0.0

    def with_coefficients(self, coeffs: Sequence[float]) -> LowIntersectionHamiltonian:
        if len(coeffs) != self.M:
            raise ValueError("coefficient count does not match term count")
        return LowIntersectionHamiltonian(
            self.n_qubits, tuple((p, c) for p, c in zip(self.paulis, coeffs)))

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits,
                "terms": [{"pauli": str(p), "coeff": c} for p, c in self.terms]}

    @classmethod
    def from_dict(cls, data: dict) -> LowIntersectionHamiltonian:
        n = int(data["n_qubits"])
        terms = []
        for t in data["terms"]:
            p = PauliString.from_str(t["pauli"])
            if p.n_qubits != n:
                raise ValueError(f"Pauli {t['pauli']!r} has length {p.n_qubits}, expected {n}")
            terms.append((p, float(t["coeff"])))
        return cls(n, tuple(terms))


def validate(h: LowIntersectionHamiltonian) -> tuple[int, int, int]:
    """Recompute ``(k, degree, M)``; construction already enforces the rest."""
    return h.k, h.degree, h.M


def _cluster_key(c: Cluster):
    return (c[0], len(c), c)


@lru_cache(maxsize=256)
def build_clusters(h: LowIntersectionHamiltonian) -> tuple[Cluster, ...]:
    """Maximal term supports, each listed once, ordered by (min qubit, size)."""
    supports = {tuple(sorted(p.support)) for p in h.paulis}
    sets = {s: frozenset(s) for s in supports}
    maximal = [s for s in supports
               if not any(sets[s] < sets[o] for o in supports)]
    return tuple(sorted(maximal, key=_cluster_key))


@dataclass(frozen=True)
class ClusterColoring:
    clusters: tuple[Cluster, ...]
    edges: frozenset[tuple[int, int]]
    colors: tuple[int, ...]

    @property
    def n_colors(self) -> int:
        return max(self.colors) + 1 if self.colors else 0

    def color_class(self, c: int) -> tuple[Cluster, ...]:
        return tuple(C for C, col in zip(self.clusters, self.colors) if col == c)

    def constrained_qubits(self, c: int) -> frozenset[int]:
        return frozenset(q for C in self.color_class(c) for q in C)

    def max_degree(self) -> int:
        deg = [0] * len(self.clusters)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return max(deg, default=0)

    def color_of(self, cluster: Cluster) -> int:
        return self.colors[self.clusters.index(tuple(cluster))]


def cluster_graph_edges(clusters: Sequence[Cluster]) -> frozenset[tuple[int, int]]:
    sets = [frozenset(C) for C in clusters]
    edges = set()
    for i, j in itertools.combinations(range(len(sets)), 2):
        if sets[i] & sets[j] or any(sets[i] & s and sets[j] & s for s in sets):
            edges.add((i, j))
    return frozenset(edges)


def greedy_color(n_vertices: int, edges: Iterable[tuple[int, int]]) -> tuple[int, ...]:
    """First-fit coloring in vertex index order."""
    adj: list[set[int]] = [set() for _ in range(n_vertices)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    colors = [-1] * n_vertices
    for v in range(n_vertices):
        used = {colors[u] for u in adj[v] if colors[u] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return tuple(colors)


def build_cluster_graph_and_color(clusters: Sequence[Cluster]) -> ClusterColoring:
    clusters = tuple(sorted((tuple(sorted(C)) for C in clusters), key=_cluster_key))
    edges = cluster_graph_edges(clusters)
    return ClusterColoring(clusters, edges, greedy_color(len(clusters), edges))


def coloring_violations(coloring: ClusterColoring) -> list[str]:
    """Brute-force check of the two same-color conditions; empty when valid."""
    problems = []
    sets = [frozenset(C) for C in coloring.clusters]
    for i, j in itertools.combinations(range(len(sets)), 2):
        if coloring.colors[i] != coloring.colors[j]:
            continue
        if sets[i] & sets[j]:
            problems.append(f"{coloring.clusters[i]} and {coloring.clusters[j]} overlap")
        for s, C in zip(sets, coloring.clusters):
            if sets[i] & s and sets[j] & s:
                problems.append(f"{C} touches both {coloring.clusters[i]} and {coloring.clusters[j]}")
    return problems


@dataclass(frozen=True)
class QubitColoring:
    color: int
    free_qubits: tuple[int, ...]
    edges: frozenset[tuple[int, int]]
    qubit_colors: dict[int, int] = field(hash=False, compare=False)

    @property
    def n_colors(self) -> int:
        return max(self.qubit_colors.values()) + 1 if self.qubit_colors else 0


def build_qubit_graph_and_color(h: LowIntersectionHamiltonian, coloring: ClusterColoring,
                                c: int) -> QubitColoring:
    if not 0 <= c < coloring.n_colors:
        raise ValueError(f"color {c} outside [0, {coloring.n_colors})")
    constrained = coloring.constrained_qubits(c)
    free = tuple(q for q in range(h.n_qubits) if q not in constrained)
    index = {q: i for i, q in enumerate(free)}
    edges = set()
    for p in h.paulis:
        supp = p.support
        if not supp & constrained:
            continue
        outside = sorted(supp - constrained)
        for a, b in itertools.combinations(outside, 2):
            edges.add((index[a], index[b]))
    cols = greedy_color(len(free), edges)
    return QubitColoring(
        color=c,
        free_qubits=free,
        edges=frozenset((free[i], free[j]) for i, j in edges),
        qubit_colors={q: col for q, col in zip(free, cols)},
    )


def basis_assignments(cluster: Cluster) -> list[tuple[str, ...]]:
    """All ``3**|C|`` Pauli eigenbasis labels of a cluster, in a fixed order."""
    return [tuple(g) for g in itertools.product("XYZ", repeat=len(cluster))]


def all_bitstrings(n: int) -> list[Bits]:
    return [tuple(b) for b in itertools.product((0, 1), repeat=n)]


def diagonal_part(h: LowIntersectionHamiltonian, cluster: Sequence[int],
                  gamma: Sequence[str]) -> dict[Bits, float]:
    """Coefficients of the part of ``h`` diagonal in the ``gamma`` eigenbasis of ``cluster``.

    Keys are bit tuples aligned with the sorted cluster; ``b[i] == 1`` means the
    term acts with ``gamma[i]`` on the i-th cluster qubit.  Every key is present.
    """
    cluster = tuple(sorted(cluster))
    if cluster not in build_clusters(h):
        raise ValueError(f"{cluster} is not an interacting cluster of this Hamiltonian")
    if len(gamma) != len(cluster):
        raise ValueError("basis assignment must cover the cluster exactly")
    out = {b: 0.0 for b in all_bitstrings(len(cluster))}
    cset = frozenset(cluster)
    for p, coeff in h.terms:
        if not p.support <= cset:
            continue
        letters = p.letters
        if all(letters[q] == gamma[i] for i, q in enumerate(cluster) if q in letters):
            out[tuple(int(q in letters) for q in cluster)] = coeff
    return out
