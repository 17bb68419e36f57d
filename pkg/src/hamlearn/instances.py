"""Instance generators."""
from __future__ import annotations

import numpy as np

from .hamiltonian import LowIntersectionHamiltonian
from .pauli import PauliString

KINDS = ("heisenberg_chain", "random_low_intersection")


def _coeff(seed: int, key: tuple[int, ...], lo: float, hi: float) -> float:
    return float(np.random.default_rng([seed, *key]).uniform(lo, hi))


def heisenberg_chain(n_qubits: int, seed: int = 0,
                     coeff_range: tuple[float, float] = (-1.0, 1.0)) -> LowIntersectionHamiltonian:
    """Open chain of XX, YY, ZZ couplings plus a Z field on every site.

    Each coefficient is drawn from its own stream keyed by the term, so chains
    of different lengths built from one seed agree on their common terms.
    """
    if n_qubits < 2:
        raise ValueError("a chain needs at least 2 qubits")
    lo, hi = _check_range(coeff_range)
    terms = []
    for a in range(n_qubits - 1):
        for i, ch in enumerate("XYZ"):
            p = PauliString.from_letters(n_qubits, {a: ch, a + 1: ch})
            terms.append((p, _coeff(seed, (0, i, a), lo, hi)))
    for a in range(n_qubits):
        terms.append((PauliString.from_letters(n_qubits, {a: "Z"}), _coeff(seed, (1, a), lo, hi)))
    return LowIntersectionHamiltonian(n_qubits, tuple(terms))


def random_low_intersection(n_qubits: int, seed: int = 0, k: int = 2, max_degree: int = 4,
                            coeff_range: tuple[float, float] = (-1.0, 1.0),
                            density: float = 0.8) -> LowIntersectionHamiltonian:
    """Random geometrically local ``k``-body terms on a line with overlap degree at most ``max_degree``.

    Candidate supports are windows of consecutive qubits (sizes 1..k) visited
    in random order; a candidate is kept only if no term would then overlap
    more than ``max_degree`` others.  At least one term is always returned.
    """
    if n_qubits < 2:
        raise ValueError("need at least 2 qubits")
    if k not in (2, 3) or k > n_qubits:
        raise ValueError("k must be 2 or 3 and at most n_qubits")
    if max_degree < 1:
        raise ValueError("max_degree must be positive")
    lo, hi = _check_range(coeff_range)
    rng = np.random.default_rng(seed)
    windows = [tuple(range(s, s + w)) for w in range(1, k + 1) for s in range(n_qubits - w + 1)]
    order = rng.permutation(len(windows))
    chosen: list[tuple[PauliString, float]] = []
    masks: list[int] = []
    degree: list[int] = []
    for idx in order:
        if rng.random() > density:
            continue
        win = windows[idx]
        p = PauliString.from_letters(n_qubits, {q: "XYZ"[rng.integers(3)] for q in win})
        if any(p == q for q, _ in chosen):
            continue
        m = p.x | p.z
        hits = [j for j, o in enumerate(masks) if m & o]
        if len(hits) > max_degree or any(degree[j] + 1 > max_degree for j in hits):
            continue
        for j in hits:
            degree[j] += 1
        chosen.append((p, float(rng.uniform(lo, hi))))
        masks.append(m)
        degree.append(len(hits))
    if not chosen:
        # every candidate was thinned out; a lone term never violates the degree bound
        win = windows[order[0]]
        p = PauliString.from_letters(n_qubits, {q: "XYZ"[rng.integers(3)] for q in win})
        chosen.append((p, float(rng.uniform(lo, hi))))
    h = LowIntersectionHamiltonian(n_qubits, tuple(chosen))
    assert h.degree <= max_degree
    return h


def generate_instance(kind: str, n_qubits: int, seed: int = 0,
                      coeff_range: tuple[float, float] = (-1.0, 1.0), **kwargs) -> LowIntersectionHamiltonian:
    if kind == "heisenberg_chain":
        return heisenberg_chain(n_qubits, seed, coeff_range)
    if kind == "random_low_intersection":
        return random_low_intersection(n_qubits, seed, coeff_range=coeff_range, **kwargs)
    raise ValueError(f"unknown instance kind {kind!r}; expected one of {KINDS}")


def _check_range(coeff_range) -> tuple[float, float]:
    lo, hi = map(float, coeff_range)
    if not -1.0 <= lo <= hi <= 1.0:
        raise ValueError(f"coefficient range {coeff_range} must lie inside [-1, 1]")
    return lo, hi
