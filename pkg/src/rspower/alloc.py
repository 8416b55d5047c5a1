"""Gradient-descent power allocators, step-size bounds and baselines.

Both allocators descend the separable quadratic MSE objective from an
all-zero start:

    a[t+1] = a[t] - mu * grad(a[t])

The transmit power constraint sum_i a_i^2 = total_power can be enforced
three ways (`projection`):

- "per_iteration": clamp negative coefficients to zero, then rescale by
  beta = sqrt(total_power / sum a_i^2) after every update, so iterates
  live on the constraint surface;
- "final": run the relaxed recursion and enforce the constraint once on
  the result (the trajectory still records the deployable, scaled
  allocation per iteration while mse_history tracks the relaxed
  recursion that is actually descending);
- "none": raw recursion, for analysis.

Note that on the constraint surface the robust and plain objectives
differ only by the constant 2 M err_var total_power when all precoder
columns have unit norm, so per-iteration projection makes both
allocators converge to the same point; the robust shrinkage survives in
the relaxed recursion, which is why "final" is the mode used by the
sum-rate experiment presets.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from rspower.errors import (
    BudgetExceededError,
    DivergenceError,
    DomainError,
    UnstableGeometryWarning,
)
from rspower.objective import CouplingTable, PowerVector, quadratic_coefficients

logger = logging.getLogger(__name__)

_DIVERGENCE_LIMIT = 1e6
_CONVERGENCE_RTOL = 1e-9
PROJECTION_MODES = ("per_iteration", "final", "none")


@dataclass(frozen=True)
class StepBounds:
    """Step-size stability bounds for the gradient recursions.

    lambda_private / lambda_common follow the printed bound constants:
    lambda_j = S_j + F_j (+ err_var ||p_j||^2 in robust mode) and
    lambda_c = 2 S_c - F^(c) (+ err_var ||p_c||^2), with
    mu_max = min(1/lambda_c, min_j 1/(2 lambda_j)).  Because lambda_c
    subtracts the cross sum it can be nonpositive, in which case an
    UnstableGeometryWarning is emitted and mu_max is computed from the
    positive entries only (NaN if none remain).

    curvature_* hold the exact per-coefficient quadratic coefficients
    q_i of the objective (second derivative 2 q_i); the update multiplier
    of coefficient i is 1 - 2 mu q_i, so mu_max_stable = 1 / max_i q_i is
    a guaranteed-stable ceiling.  The automatic step size uses
    0.5 * mu_max_stable.
    """

    lambda_private: np.ndarray
    lambda_common: float
    mu_max: float
    curvature_private: np.ndarray
    curvature_common: float
    mu_max_stable: float
    mode: str


def step_bounds(ct: CouplingTable, mode: str = "plain", err_var: float = 0.0) -> StepBounds:
    """Stability bounds for one coupling table.

    mode "plain" ignores err_var; mode "robust" adds err_var ||p||^2 to
    every printed bound constant (and the exact robust terms to the
    curvatures).  Robust bounds with err_var = 0 equal the plain ones.
    """
    if mode not in ("plain", "robust"):
        raise DomainError(f"mode must be 'plain' or 'robust', got {mode!r}")
    if err_var < 0:
        raise DomainError("err_var must be nonnegative")
    rob = err_var if mode == "robust" else 0.0

    lam_p = ct.private_gain + ct.cross_private + rob * ct.norm_private_sq
    lam_c = 2.0 * ct.common_gain + rob * ct.norm_common_sq - ct.cross_common

    q, _ = quadratic_coefficients(ct, rob)
    max_q = float(np.max(q))
    mu_stable = 1.0 / max_q if max_q > 0 else np.inf

    if lam_c <= 0 or np.any(lam_p <= 0):
        warnings.warn(
            "nonpositive step-size bound constant(s); the printed bound is "
            "unreliable for this geometry",
            UnstableGeometryWarning,
            stacklevel=2,
        )
    candidates = []
    if lam_c > 0:
        candidates.append(1.0 / lam_c)
    candidates.extend(1.0 / (2.0 * lam_p[lam_p > 0]))
    mu_max = float(min(candidates)) if candidates else float("nan")

    return StepBounds(
        lambda_private=lam_p,
        lambda_common=float(lam_c),
        mu_max=mu_max,
        curvature_private=q[1:],
        curvature_common=float(q[0]),
        mu_max_stable=float(mu_stable),
        mode=mode,
    )


@dataclass(frozen=True)
class AllocatorRun:
    """One allocator execution: per-iteration allocations and diagnostics.

    trajectory[t] is the deployable allocation after iteration t + 1
    (iteration 1 is the all-zero start); in projected modes every stored
    vector satisfies the power constraint.  mse_history[t] is the
    objective value of the recursion iterate (identical to the stored
    vector except in "final" mode, where the recursion is relaxed).
    """

    trajectory: list[PowerVector]
    mse_history: np.ndarray
    step_size: float
    iterations: int
    converged: bool
    bound_used: float
    projection: str

    @property
    def final(self) -> PowerVector:
        return self.trajectory[-1]


def _project(a: np.ndarray, target: float, clamp: bool) -> np.ndarray:
    if clamp:
        a = np.maximum(a, 0.0)
    ssq = float(np.sum(a**2))
    if ssq > 0.0 and ssq != target:
        a = a * np.sqrt(target / ssq)
    return a


def _iterate_once(a: np.ndarray, q2: np.ndarray, r2: np.ndarray, mu: float,
                  target: float | None, iteration: int) -> np.ndarray:
    """One recursion update from the cached quadratic coefficients.

    This is the post-first-iteration hot path: the channel/precoder
    products live in (q2, r2), so the update is O(M) regardless of the
    antenna count.
    """
    a = a - mu * (q2 * a - r2)
    if np.max(np.abs(a)) > _DIVERGENCE_LIMIT:
        raise DivergenceError(mu, iteration)
    if target is not None:
        a = _project(a, target, clamp=True)
    return a


def _run_gradient(ct: CouplingTable, err_var: float, noise_var: float, total_power: float,
                  mu, iters: int, projection: str, start: np.ndarray | None) -> AllocatorRun:
    if projection not in PROJECTION_MODES:
        raise DomainError(f"projection must be one of {PROJECTION_MODES}, got {projection!r}")
    if iters < 1:
        raise DomainError("iters must be at least 1")
    if total_power <= 0:
        raise DomainError("total_power must be positive")

    m = ct.n_streams
    q, r = quadratic_coefficients(ct, err_var)
    const = m * (1.0 + 2.0 * noise_var) + 1.0
    q2, r2 = 2.0 * q, 2.0 * r
    max_q = float(np.max(q))
    bound = 1.0 / max_q if max_q > 0 else np.inf

    if mu == "auto":
        mu_val = 0.5 * bound if np.isfinite(bound) else 0.0
    else:
        mu_val = float(mu)
        if mu_val < 0:
            raise DomainError("mu must be nonnegative")

    a = np.zeros(m + 1) if start is None else np.asarray(start, dtype=float).copy()
    per_iter = projection == "per_iteration"
    if per_iter:
        a = _project(a, total_power, clamp=True)

    def deploy(vec):
        # Stored allocations: the iterate itself in projected-loop/raw
        # modes, the once-enforced rescaling of it in "final" mode.
        if projection == "final":
            return PowerVector(_project(vec.copy(), total_power, clamp=True))
        return PowerVector(vec.copy())

    trajectory = [deploy(a)]
    mse_history = [const + float(np.sum(q * a**2 - r2 * a))]
    prev = a.copy()
    converged = False
    target = total_power if per_iter else None
    for t in range(2, iters + 1):
        a = _iterate_once(a, q2, r2, mu_val, target, t)
        trajectory.append(deploy(a))
        mse_history.append(const + float(np.sum(q * a**2 - r2 * a)))
        step = float(np.max(np.abs(a - prev)))
        converged = step <= _CONVERGENCE_RTOL * max(1.0, float(np.max(np.abs(a))))
        prev = a.copy()

    return AllocatorRun(
        trajectory=trajectory,
        mse_history=np.asarray(mse_history),
        step_size=mu_val,
        iterations=iters,
        converged=converged,
        bound_used=bound,
        projection=projection,
    )


def run_apa(ct: CouplingTable, noise_var: float, total_power: float, mu="auto",
            iters: int = 30, projection: str = "per_iteration",
            start: np.ndarray | None = None) -> AllocatorRun:
    """Adaptive power allocation: descend the plain MSE from a zero start.

    mu="auto" uses half the guaranteed-stable step ceiling for this
    instance; an explicit mu overrides it (e.g. the fixed 0.004 used for
    convergence-trace experiments).
    """
    return _run_gradient(ct, 0.0, noise_var, total_power, mu, iters, projection, start)


def run_apar(ct: CouplingTable, err_var: float, noise_var: float, total_power: float,
             mu="auto", iters: int = 30, projection: str = "per_iteration",
             start: np.ndarray | None = None) -> AllocatorRun:
    """Robust adaptive power allocation: descend the error-aware MSE.

    Identical to :func:`run_apa` when err_var = 0.  Requires an
    estimate-sourced coupling table (the robustness terms condition on
    the estimate).
    """
    if err_var < 0:
        raise DomainError("err_var must be nonnegative")
    if err_var > 0 and ct.source != "estimate":
        raise DomainError("robust allocation conditions on an estimate-sourced table")
    return _run_gradient(ct, err_var, noise_var, total_power, mu, iters, projection, start)


def uniform_allocation(m: int, total_power: float, delta: float) -> PowerVector:
    """Common share delta of the budget, remainder split evenly over streams."""
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    if m < 1:
        raise DomainError("need at least one private stream")
    if total_power <= 0:
        raise DomainError("total_power must be positive")
    a = np.empty(m + 1)
    a[0] = np.sqrt(delta * total_power)
    a[1:] = np.sqrt((1.0 - delta) * total_power / m)
    return PowerVector(a)


def random_allocation(m: int, total_power: float, seed) -> PowerVector:
    """Nonnegative uniform draws rescaled onto the power constraint."""
    if m < 1:
        raise DomainError("need at least one private stream")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    while True:
        raw = rng.uniform(size=m + 1)
        if np.sum(raw**2) > 0:
            break
    return PowerVector(raw * np.sqrt(total_power / np.sum(raw**2)))


def _delta_grid(grid_step: float) -> np.ndarray:
    if not 0.0 < grid_step <= 0.5:
        raise DomainError(f"grid_step must lie in (0, 0.5], got {grid_step}")
    deltas = list(np.arange(0.0, 1.0 + 1e-12, grid_step))
    if deltas[-1] < 1.0 - 1e-12:
        deltas.append(1.0)
    return np.asarray(deltas)


def grid_search_delta(metric, m: int, total_power: float, private_rule: str = "upa",
                      grid_step: float = 0.05, sense: str = "min", rng=None):
    """Line search over the common power share delta.

    `metric` maps a candidate PowerVector to a score; `sense` selects
    minimization or maximization.  private_rule "upa" splits the private
    budget evenly, "random" fixes one random private profile (scaled per
    delta).  Exact ties resolve toward the smaller delta.  Returns
    (delta, PowerVector).
    """
    if sense not in ("min", "max"):
        raise DomainError("sense must be 'min' or 'max'")
    if private_rule not in ("upa", "random"):
        raise DomainError("private_rule must be 'upa' or 'random'")
    if private_rule == "random":
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        weights = gen.uniform(size=m)
        if np.sum(weights**2) == 0:
            weights = np.ones(m)
        weights = weights / np.sqrt(np.sum(weights**2))

    best = None
    for delta in _delta_grid(grid_step):
        if private_rule == "upa":
            cand = uniform_allocation(m, total_power, float(delta))
        else:
            a = np.empty(m + 1)
            a[0] = np.sqrt(delta * total_power)
            a[1:] = weights * np.sqrt((1.0 - delta) * total_power)
            cand = PowerVector(a)
        score = float(metric(cand))
        keyed = score if sense == "min" else -score
        if best is None or keyed < best[0]:
            best = (keyed, float(delta), cand)
    return best[1], best[2]


def simplex_candidate_count(m: int, grid_step: float) -> int:
    """Number of squared-fraction compositions for the full grid search."""
    n = round(1.0 / grid_step)
    if n < 1 or abs(1.0 / grid_step - n) > 1e-9:
        raise DomainError(f"1/grid_step must be a positive integer, got {1.0 / grid_step}")
    return comb(n + m, m)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head, *rest)


def grid_search_full(metric, m: int, total_power: float, grid_step: float,
                     sense: str = "min", budget: int = 2_000_000) -> PowerVector:
    """Exhaustive search over all streams on the discretized power simplex.

    Candidates enumerate squared power fractions in steps of grid_step
    summing to one (common coordinate first, ascending, so exact ties
    resolve toward less common power).  Refuses to run when the
    composition count exceeds `budget`.
    """
    if sense not in ("min", "max"):
        raise DomainError("sense must be 'min' or 'max'")
    count = simplex_candidate_count(m, grid_step)
    logger.info("full grid search: %d candidates (m=%d, step=%g)", count, m, grid_step)
    if count > budget:
        raise BudgetExceededError(count, budget)
    n = round(1.0 / grid_step)
    best = None
    for parts in _compositions(n, m + 1):
        fractions = np.asarray(parts, dtype=float) / n
        cand = PowerVector(np.sqrt(fractions * total_power))
        score = float(metric(cand))
        keyed = score if sense == "min" else -score
        if best is None or keyed < best[0]:
            best = (keyed, cand)
    return best[1]
