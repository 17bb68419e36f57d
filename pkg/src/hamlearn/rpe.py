"""Robust phase estimation from cosine/sine Bernoulli experiments.

Stage ``j`` (1-based) probes the phase multiple ``l_j = 2**(j-1)`` with ``M_j``
shots in each quadrature, turns the two success frequencies into an angle
with ``atan2`` and keeps the branch of ``angle / l_j`` closest to the previous
stage's estimate.  The final stage fixes the precision; earlier stages only
need to land within a quarter turn, so they get more shots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

MAX_OFFSET = 1 / math.sqrt(8)
# shots per stage scale as SHOTS_PER_LOG * ln(1/delta); calibrated against a
# 0.30 probability offset whose signs are chosen per stage to maximise the
# angle error, which leaves little room before branch selection breaks
SHOTS_PER_LOG = 175.0
DEFAULT_BETA = 1.0


class PhaseOracle(Protocol):
    def __call__(self, multiple: int, quadrature: str, shots: int) -> int:
        """Number of successes among ``shots`` draws with probability
        ``(1 + cos(multiple*theta))/2`` (``"cos"``) or ``(1 + sin(multiple*theta))/2`` (``"sin"``)."""


@dataclass(frozen=True)
class StageSchedule:
    multiples: tuple[int, ...]
    shots: tuple[int, ...]

    @property
    def n_stages(self) -> int:
        return len(self.multiples)

    def total_multiple(self) -> int:
        """Sum of multiples over all calls of both quadratures."""
        return 2 * sum(l * m for l, m in zip(self.multiples, self.shots))

    def total_shots(self) -> int:
        return 2 * sum(self.shots)


@dataclass
class PhaseEstimate:
    theta: float
    target_error: float
    delta: float
    oracle_calls: int = 0
    multiple_sum: int = 0
    stage_angles: list[float] = field(default_factory=list)


def default_alpha(delta: float) -> int:
    return max(1, math.ceil(SHOTS_PER_LOG * math.log(1 / delta)))


def n_stages(target_error: float) -> int:
    if not 0 < target_error < math.pi:
        raise ValueError(f"target error {target_error} outside (0, pi)")
    return max(1, math.ceil(math.log2(math.pi / target_error)))


def rpe_schedule(target_error: float, delta: float, alpha: int | None = None,
                 beta: float = DEFAULT_BETA) -> StageSchedule:
    """Multiples ``2**(j-1)`` and shots ``ceil(alpha * (1 + beta * (J - j)))``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    J = n_stages(target_error)
    alpha = default_alpha(delta) if alpha is None else alpha
    multiples = tuple(2 ** (j - 1) for j in range(1, J + 1))
    shots = tuple(math.ceil(alpha * (1 + beta * (J - j))) for j in range(1, J + 1))
    return StageSchedule(multiples, shots)


def wrap(angle: float) -> float:
    """Map to [-pi, pi)."""
    return (angle + math.pi) % (2 * math.pi) - math.pi


def stage_angle(cos_successes: int, sin_successes: int, shots: int) -> float:
    return math.atan2(2 * sin_successes / shots - 1, 2 * cos_successes / shots - 1)


def ladder_estimate(multiples: Sequence[int], cos_successes: Sequence[int],
                    sin_successes: Sequence[int], shots: Sequence[int]) -> tuple[float, list[float]]:
    """Combine per-stage counts into one phase in [-pi, pi)."""
    estimate = None
    angles = []
    for l, c, s, m in zip(multiples, cos_successes, sin_successes, shots):
        phi = stage_angle(c, s, m)
        angles.append(phi)
        if estimate is None:
            estimate = phi / l
            continue
        # branches (phi + 2 pi k) / l; pick the one closest to the previous estimate
        k = round((estimate * l - phi) / (2 * math.pi))
        estimate = (phi + 2 * math.pi * k) / l
    return wrap(estimate), angles


def estimate_phase(oracle: PhaseOracle | Callable[[int, str, int], int], target_error: float,
                   delta: float, rng: np.random.Generator | None = None,
                   alpha: int | None = None, beta: float = DEFAULT_BETA) -> PhaseEstimate:
    """Run the full ladder against ``oracle``.

    ``rng`` is accepted for interface symmetry; all randomness lives in the
    oracle, so the estimate is a deterministic function of its outcomes.
    """
    sched = rpe_schedule(target_error, delta, alpha, beta)
    cos_s, sin_s = [], []
    for l, m in zip(sched.multiples, sched.shots):
        cos_s.append(int(oracle(l, "cos", m)))
        sin_s.append(int(oracle(l, "sin", m)))
    theta, angles = ladder_estimate(sched.multiples, cos_s, sin_s, sched.shots)
    return PhaseEstimate(theta, target_error, delta, oracle_calls=sched.total_shots(),
                         multiple_sum=sched.total_multiple(), stage_angles=angles)


def bernoulli_oracle(theta: float, rng: np.random.Generator, offset: float = 0.0,
                     offset_fn: Callable[[int, str], float] | None = None):
    """Closed-form oracle with an optional additive probability perturbation."""

    def oracle(multiple: int, quadrature: str, shots: int) -> int:
        trig = math.cos if quadrature == "cos" else math.sin
        p = 0.5 * (1 + trig(multiple * theta))
        p += offset_fn(multiple, quadrature) if offset_fn is not None else offset
        return int(rng.binomial(shots, min(1.0, max(0.0, p))))

    return oracle


def median_amplify(estimates: Sequence[float]) -> float:
    """Median of an odd number of phase estimates lying within a half circle."""
    if not estimates or len(estimates) % 2 == 0:
        raise ValueError("median amplification needs an odd, non-zero number of estimates")
    vals = np.asarray(estimates, dtype=float)
    # rotate so the window does not straddle the branch cut
    ref = math.atan2(np.sin(vals).sum(), np.cos(vals).sum())
    rel = np.array([wrap(v - ref) for v in vals])
    return wrap(ref + float(np.median(rel)))
