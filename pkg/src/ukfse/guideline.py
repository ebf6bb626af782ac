"""Selection rules for the embedding constant alpha.

The quaternion-norm error e = ||q||^2 - 1 of the Euler-discretized embedded
attitude equation obeys a scalar recursion.  Under three inequalities on
(alpha*h, beta, epsilon) the band |e| < delta is a positively invariant
attractor with region of attraction |e| <= epsilon; this module evaluates the
recursion, the inequalities, and the delta bound, and can brute-force check
the attractor property by simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import Rng


def error_step(e, omega_norm, alpha: float, h: float):
    """One step of the norm-error recursion; broadcasts over array inputs.

    e' = -1 + (1 + e) ((1 - alpha h e)^2 + h^2 omega_norm^2 / 4)
    """
    e = np.asarray(e, dtype=float)
    omega_norm = np.asarray(omega_norm, dtype=float)
    ah = alpha * h
    out = -1.0 + (1.0 + e) * ((1.0 - ah * e) ** 2 + (h * omega_norm) ** 2 / 4.0)
    return float(out) if out.ndim == 0 else out


def decay_margin(alpha_h: float, epsilon: float) -> float:
    """Worst-case Lyapunov decrease coefficient over |e| <= epsilon."""
    ah = alpha_h
    return (
        ah
        * (1.0 - epsilon)
        * (2.0 - ah * epsilon)
        * (2.0 - 2.0 * ah - ah * (2.0 - ah) * epsilon + ah**2 * epsilon**2)
    )


def delta(h: float, alpha_h: float, beta: float, epsilon: float, U: float) -> float:
    """Attractor radius delta(h, alpha h, beta); beta = 0 gives the inner radius.

    Returns nan when the radicand is not well defined (non-positive
    denominator, i.e. beta at or above the decay margin, or a negative
    numerator), which callers report as infeasibility.
    """
    ah = alpha_h
    num = (
        (1.0 - 2.0 * ah * (1.0 - epsilon) + ah**2 * epsilon * (1.0 + epsilon))
        * epsilon
        * (1.0 + epsilon)
        * U**2
        / 2.0
        + (1.0 + epsilon) ** 2 * h**2 * U**4 / 16.0
    )
    den = decay_margin(ah, epsilon) - beta
    if den <= 0.0 or num < 0.0:
        return float("nan")
    return h * np.sqrt(num / den)


@dataclass(frozen=True)
class GuidelineInput:
    epsilon: float  # error-band radius, 0 < epsilon < 1
    U: float        # angular-rate bound [rad/s]
    h: float        # time step [s]
    alpha: float    # embedding constant [1/s]
    beta: float     # decay margin, 0 < beta < 1

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.U < 0.0:
            raise ValueError("U must be nonnegative")
        if self.h <= 0.0:
            raise ValueError("h must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")

    @property
    def alpha_h(self) -> float:
        return self.alpha * self.h


@dataclass
class GuidelineResult:
    cond1_ok: bool   # 0 < alpha h < 2/3
    cond2_ok: bool   # 0 < beta < margin and margin < 1
    cond3_ok: bool   # delta < epsilon
    delta: float
    delta0: float    # beta = 0 radius
    margin: float
    alpha_max: float  # feasibility upper bound (2/3)/h from condition 1
    note: str = ""

    @property
    def feasible(self) -> bool:
        return self.cond1_ok and self.cond2_ok and self.cond3_ok


def check_conditions(inp: GuidelineInput) -> GuidelineResult:
    """Evaluate the three alpha-selection inequalities; infeasibility is a result."""
    ah = inp.alpha_h
    cond1 = 0.0 < ah < 2.0 / 3.0
    margin = decay_margin(ah, inp.epsilon)
    cond2 = (0.0 < inp.beta < margin) and (margin < 1.0)
    d = delta(inp.h, ah, inp.beta, inp.epsilon, inp.U)
    d0 = delta(inp.h, ah, 0.0, inp.epsilon, inp.U)
    cond3 = np.isfinite(d) and d < inp.epsilon
    if cond1 and cond2 and cond3:
        note = "feasible"
    else:
        failed = [name for ok, name in
                  ((cond1, "condition 1"), (cond2, "condition 2"), (cond3, "condition 3"))
                  if not ok]
        note = (f"{', '.join(failed)} failed; a sufficiently small alpha*h "
                "always admits a feasible (beta, h) pair")
    return GuidelineResult(
        cond1_ok=cond1,
        cond2_ok=cond2,
        cond3_ok=cond3,
        delta=float(d),
        delta0=float(d0),
        margin=float(margin),
        alpha_max=(2.0 / 3.0) / inp.h,
        note=note,
    )


@dataclass
class AttractorReport:
    n_trajectories: int
    n_steps: int
    delta: float
    violations: int
    never_entered: int
    max_entry_step: int
    max_post_entry_abs_e: float
    examples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.never_entered == 0


def verify_attractor(
    inp: GuidelineInput,
    n_trajectories: int,
    n_steps: int,
    rng: Rng,
) -> AttractorReport:
    """Simulate the error recursion from the attraction region and check the claim.

    Initial errors sample [-epsilon, epsilon] including both endpoints; half
    the trajectories draw per-step omega norms uniformly in [0, U], the other
    half pin omega at U, the worst case for the bound.  A trajectory violates
    the claim if it leaves the delta band after first entering it, or never
    enters within n_steps.
    """
    res = check_conditions(inp)
    if not res.feasible:
        raise ValueError(f"conditions do not hold: {res.note}")
    d = res.delta

    e = rng.uniform(-inp.epsilon, inp.epsilon, size=n_trajectories)
    e[0] = inp.epsilon
    if n_trajectories > 1:
        e[1] = -inp.epsilon
    pinned = np.arange(n_trajectories) % 2 == 0

    entered = np.abs(e) < d
    entry_step = np.where(entered, 0, -1)
    violations = 0
    max_post = float(np.max(np.abs(e[entered]), initial=0.0))
    examples: list = []
    for k in range(1, n_steps + 1):
        om = rng.uniform(0.0, inp.U, size=n_trajectories)
        om[pinned] = inp.U
        e = error_step(e, om, inp.alpha, inp.h)
        inside = np.abs(e) < d
        bad = entered & ~inside
        if np.any(bad):
            violations += int(np.count_nonzero(bad))
            for idx in np.nonzero(bad)[0][:5]:
                if len(examples) < 5:
                    examples.append(
                        {"trajectory": int(idx), "step": k, "e": float(e[idx])}
                    )
        newly = inside & ~entered
        entry_step[newly] = k
        entered |= inside
        if np.any(entered):
            max_post = max(max_post, float(np.max(np.abs(e[entered]), initial=0.0)))
    never = int(np.count_nonzero(~entered))
    return AttractorReport(
        n_trajectories=n_trajectories,
        n_steps=n_steps,
        delta=d,
        violations=violations,
        never_entered=never,
        max_entry_step=int(entry_step.max()),
        max_post_entry_abs_e=max_post,
        examples=examples,
    )
