"""Experiment presets: SNR sweeps, error sweeps, convergence traces, costs.

Every run is deterministic given its spec and seed: channel draws,
estimation-error draws and scheme-internal randomness all derive from
counter-based substreams, and aggregation is order independent, so the
emitted CSV is byte-identical across repetitions and worker counts
(wall-clock columns, prefixed ``wallclock_``, are exempt).

CSV contract: UTF-8, LF line endings, '.' decimal separator, header row
``snr_db,err_var,scheme,esr,common_term,private_sum,ac_sq_fraction,
n_channels,n_errors,seed`` for the sweep commands.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from rspower.alloc import grid_search_delta, random_allocation, run_apa, run_apar, uniform_allocation
from rspower.complexity import flop_report, measure_iteration_costs
from rspower.errors import ConfigurationError
from rspower.model import SystemConfig, channel_rng, draw_complex_gaussian, generate_channel
from rspower.objective import build_coupling
from rspower.precoders import PRECODER_KINDS, make_precoder_set
from rspower.rates import _batch_rates, _coeffs, ergodic_sum_rate

SWEEP_HEADER = "snr_db,err_var,scheme,esr,common_term,private_sum,ac_sq_fraction,n_channels,n_errors,seed"
CONVERGENCE_HEADER = "iteration,scheme,objective,esr,n_channels,n_errors,seed"
COMPLEXITY_HEADER = ("n,scheme,flops_per_iteration,iterations,total_flops,big_o,"
                     "wallclock_first_iter_s,wallclock_cached_iter_s")


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _csv_text(header: str, rows) -> str:
    out = io.StringIO()
    out.write(header + "\n")
    for row in rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def _write(path, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Allocation schemes (module-level dataclasses so worker pools can pickle them)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdaptiveScheme:
    """Gradient allocator; robust=True adds the error-variance terms.

    The recursion runs relaxed and the power constraint is enforced on
    the result ("final"), which preserves the robust shrinkage that
    per-iteration rescaling would cancel (see :mod:`rspower.alloc`).
    """

    robust: bool = False
    mu: object = "auto"
    iters: int = 30
    projection: str = "final"

    def __call__(self, ctx):
        cfg = ctx.cfg
        if self.robust:
            run = run_apar(ctx.coupling, cfg.err_var, cfg.noise_var, cfg.total_power,
                           mu=self.mu, iters=self.iters, projection=self.projection)
        else:
            run = run_apa(ctx.coupling, cfg.noise_var, cfg.total_power,
                          mu=self.mu, iters=self.iters, projection=self.projection)
        return run.final


@dataclass(frozen=True)
class UniformScheme:
    """Fixed common share delta, uniform private split (delta=0: no common)."""

    delta: float = 0.0

    def __call__(self, ctx):
        cfg = ctx.cfg
        return uniform_allocation(cfg.n_streams, cfg.total_power, self.delta)


@dataclass(frozen=True)
class RandomScheme:
    """Uniform random nonnegative amplitudes rescaled to the budget."""

    def __call__(self, ctx):
        cfg = ctx.cfg
        return random_allocation(cfg.n_streams, cfg.total_power, ctx.rng)


@dataclass(frozen=True)
class GridDeltaScheme:
    """Exhaustive search over the common share, maximizing conditional ASR."""

    private_rule: str = "upa"
    grid_step: float = 0.05

    def __call__(self, ctx):
        cfg = ctx.cfg
        _, alloc = grid_search_delta(ctx.asr_metric, cfg.n_streams, cfg.total_power,
                                     private_rule=self.private_rule,
                                     grid_step=self.grid_step, sense="max", rng=ctx.rng)
        return alloc


SCHEME_LABELS = ("conv-upa", "rs-upa", "rs-random", "rs-apa", "rs-apar",
                 "rs-es-upa", "rs-es-random")


def build_scheme(label: str, mu="auto", iters: int = 30, delta: float = 0.2,
                 es_grid_step: float = 0.05, projection: str = "final"):
    """Map a scheme label to its allocator callable."""
    if label == "conv-upa":
        return UniformScheme(delta=0.0)
    if label == "rs-upa":
        return UniformScheme(delta=delta)
    if label == "rs-random":
        return RandomScheme()
    if label == "rs-apa":
        return AdaptiveScheme(robust=False, mu=mu, iters=iters, projection=projection)
    if label == "rs-apar":
        return AdaptiveScheme(robust=True, mu=mu, iters=iters, projection=projection)
    if label == "rs-es-upa":
        return GridDeltaScheme("upa", es_grid_step)
    if label == "rs-es-random":
        return GridDeltaScheme("random", es_grid_step)
    raise ConfigurationError(f"unknown scheme {label!r}; known: {SCHEME_LABELS}")


# ---------------------------------------------------------------------------
# Experiment specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: scenario, schemes, grids, trial counts, output."""

    scenario: SystemConfig
    precoder_kind: str = "zf"
    schemes: tuple[str, ...] = ("conv-upa", "rs-apa", "rs-apar", "rs-es-upa")
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    err_var_grid: tuple[float, ...] = (0.0, 0.05, 0.1, 0.2)
    n_channels: int = 200
    n_errors: int = 50
    output_path: str = ""
    mu: object = "auto"
    iters: int = 30
    delta: float = 0.2
    es_grid_step: float = 0.05
    projection: str = "final"
    jobs: int = 1

    def __post_init__(self):
        if self.precoder_kind not in PRECODER_KINDS:
            raise ConfigurationError(f"precoder_kind must be one of {PRECODER_KINDS}")
        if not self.snr_grid_db or not self.err_var_grid:
            raise ConfigurationError("snr and error-variance grids must be non-empty")
        if not self.schemes:
            raise ConfigurationError("at least one scheme is required")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigurationError("scheme labels must be unique")
        if self.n_channels < 1 or self.n_errors < 1:
            raise ConfigurationError("n_channels and n_errors must be at least 1")
        for label in self.schemes:
            build_scheme(label)  # validates the label

    @property
    def seed(self) -> int:
        return self.scenario.master_seed

    def allocator(self, label: str):
        return build_scheme(label, mu=self.mu, iters=self.iters, delta=self.delta,
                            es_grid_step=self.es_grid_step, projection=self.projection)


def default_scenario(seed: int = 1) -> SystemConfig:
    """Four transmit antennas, two users with two antennas/streams each."""
    return SystemConfig(n_tx=4, users=2, rx_antennas_per_user=(2, 2),
                        noise_var=1.0, err_var=0.1, total_power=1.0, master_seed=seed)


def convergence_scenario(seed: int = 1) -> SystemConfig:
    """Four single-antenna users at 10 dB with strong estimation error."""
    return SystemConfig(n_tx=4, users=4, rx_antennas_per_user=(1, 1, 1, 1),
                        noise_var=1.0, err_var=0.2, total_power=10.0, master_seed=seed)


def _snr_to_power(snr_db: float, noise_var: float) -> float:
    return float(noise_var * 10.0 ** (snr_db / 10.0))


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _sweep_rows(spec: ExperimentSpec, points) -> list[tuple]:
    rows = []
    for snr_db, err_var in points:
        cfg = replace(spec.scenario, total_power=_snr_to_power(snr_db, spec.scenario.noise_var),
                      err_var=err_var)
        for label in spec.schemes:
            report = ergodic_sum_rate(cfg, spec.precoder_kind, spec.allocator(label),
                                      spec.n_channels, spec.n_errors, seed=spec.seed,
                                      jobs=spec.jobs)
            rows.append((
                snr_db, err_var, label,
                report.ergodic_sum_rate,
                float(np.min(report.avg_common)),
                float(np.sum(report.avg_private)),
                report.mean_common_fraction,
                spec.n_channels, spec.n_errors, spec.seed,
            ))
    return rows


def run_snr_sweep(spec: ExperimentSpec) -> str:
    """One row per (SNR point, scheme) at the scenario's error variance."""
    points = [(snr, spec.scenario.err_var) for snr in spec.snr_grid_db]
    text = _csv_text(SWEEP_HEADER, _sweep_rows(spec, points))
    _write(spec.output_path, text)
    return text


def run_error_sweep(spec: ExperimentSpec) -> str:
    """One row per (error variance, scheme) at the scenario's SNR."""
    snr_db = spec.scenario.snr_db
    points = [(snr_db, err) for err in spec.err_var_grid]
    text = _csv_text(SWEEP_HEADER, _sweep_rows(spec, points))
    _write(spec.output_path, text)
    return text


# ---------------------------------------------------------------------------
# Convergence traces
# ---------------------------------------------------------------------------

def run_convergence(spec: ExperimentSpec, mu_override=0.004) -> str:
    """Per-iteration objective and sum-rate snapshots of the allocators.

    Every stored iterate is rescaled onto the power constraint before its
    rate snapshot, so row t answers "what if we stopped after t
    iterations"; the objective column tracks the relaxed recursion.
    """
    mu = spec.mu if mu_override is None else mu_override
    labels = [s for s in spec.schemes if s in ("rs-apa", "rs-apar")] or ["rs-apa", "rs-apar"]
    cfg = spec.scenario
    mapping = cfg.stream_mapping()
    m = mapping.n_streams
    common_rows = np.array([mapping.first_row_index_within_streams(k) for k in range(cfg.users)])

    sums = {lab: None for lab in labels}
    objs = {lab: None for lab in labels}
    for trial in range(spec.n_channels):
        realization = generate_channel(cfg, trial)
        est_rows = mapping.effective_rows(realization.estimate)
        pset = make_precoder_set(spec.precoder_kind, est_rows, cfg.noise_var, cfg.total_power,
                                 full_estimate=realization.estimate)
        ct = build_coupling(est_rows, pset, source="estimate")
        err = draw_complex_gaussian(channel_rng(cfg.master_seed, trial, 1),
                                    (spec.n_errors, m, cfg.n_tx), cfg.err_var)
        true_rows = est_rows[None, :, :] + err
        phis = true_rows @ pset.private
        phics = true_rows @ pset.common
        for lab in labels:
            if lab == "rs-apar":
                run = run_apar(ct, cfg.err_var, cfg.noise_var, cfg.total_power, mu=mu,
                               iters=spec.iters, projection=spec.projection)
            else:
                run = run_apa(ct, cfg.noise_var, cfg.total_power, mu=mu,
                              iters=spec.iters, projection=spec.projection)
            esr_t = np.empty(spec.iters)
            for t, alloc in enumerate(run.trajectory):
                rc, rp = _batch_rates(phis, phics, _coeffs(alloc), cfg.noise_var, common_rows)
                esr_t[t] = float(np.min(rc.mean(axis=0)) + rp.mean(axis=0).sum())
            sums[lab] = esr_t if sums[lab] is None else sums[lab] + esr_t
            objs[lab] = run.mse_history if objs[lab] is None else objs[lab] + run.mse_history

    rows = []
    for t in range(spec.iters):
        for lab in labels:
            rows.append((t + 1, lab, objs[lab][t] / spec.n_channels,
                         sums[lab][t] / spec.n_channels,
                         spec.n_channels, spec.n_errors, spec.seed))
    text = _csv_text(CONVERGENCE_HEADER, rows)
    _write(spec.output_path, text)
    return text


# ---------------------------------------------------------------------------
# Complexity table
# ---------------------------------------------------------------------------

def run_complexity_table(n_grid, iterations: int = 30, output_path: str = "",
                         measure: bool = True) -> str:
    """Analytic FLOP rows plus measured first/cached iteration wall-clock."""
    rows = []
    for n in n_grid:
        if measure:
            first_s, cached_s = measure_iteration_costs(int(n))
        else:
            first_s = cached_s = float("nan")
        for algorithm in ("APA", "APA-R"):
            rep = flop_report(algorithm, int(n), iterations)
            rows.append((int(n), algorithm, rep.flops_per_iteration, rep.iterations,
                         rep.total, rep.big_o.replace(",", ";"), first_s, cached_s))
    text = _csv_text(COMPLEXITY_HEADER, rows)
    _write(output_path, text)
    return text
