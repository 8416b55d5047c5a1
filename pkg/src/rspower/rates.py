"""SINR and ergodic sum-rate evaluation by nested Monte Carlo.

Rates are evaluated on the true channel (the transmitter designs on the
estimate, the receivers decode on what is actually there); the variant
that places the estimated coupling in the SINR numerators is available
via `numerator_channel` / `use_estimate_numerator` for comparison.

The common symbol is decoded first at every user, treating all private
streams as interference, and is then removed by interference
cancellation, so private SINRs exclude the common term.  Each private
stream is detected on its assigned receive row; the common symbol of
user k is decoded on the user's first assigned row (no receive
combining).

The ergodic sum rate averages in two stages: an outer loop over channel
estimates (the allocator only ever sees the estimate) and an inner loop
over estimation-error draws conditioned on it, with

    esr = min_k mean_channels(avg common rate of user k)
          + sum_streams mean_channels(avg private rate).
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from rspower.errors import DomainError
from rspower.model import StreamMapping, SystemConfig, channel_rng, draw_complex_gaussian, generate_channel
from rspower.objective import CouplingTable, PowerVector, build_coupling
from rspower.precoders import PrecoderSet, make_precoder_set


def _coeffs(a) -> np.ndarray:
    return a.coeffs if isinstance(a, PowerVector) else np.asarray(a, dtype=float)


def _batch_rates(phis, phics, coeffs, noise_var, common_rows, num_phis=None, num_phics=None):
    """Per-draw rates from effective-row couplings.

    phis: (D, M, M) with [d, i, q] = h_i . p_q, phics: (D, M).
    Returns (common (D, K), private (D, M)) in bits/s/Hz.
    """
    ap2 = coeffs[1:] ** 2
    num_phis = phis if num_phis is None else num_phis
    num_phics = phics if num_phics is None else num_phics
    stream_power = ap2[None, None, :] * np.abs(phis) ** 2        # (D, M, M)
    total_private = np.sum(stream_power, axis=2)                 # (D, M) per row
    m = phis.shape[1]
    rows = np.arange(m)
    own = ap2[None, :] * np.abs(num_phis[:, rows, rows]) ** 2    # (D, M)
    own_true = stream_power[:, rows, rows]
    gamma_private = own / (total_private - own_true + noise_var)
    gamma_common = (coeffs[0] ** 2 * np.abs(num_phics) ** 2) / (total_private + noise_var)
    private = np.log2(1.0 + gamma_private)
    common = np.log2(1.0 + gamma_common[:, common_rows])
    return common, private


def sinr_common(user: int, channel: np.ndarray, precoders: PrecoderSet, a, noise_var: float,
                mapping: StreamMapping, numerator_channel: np.ndarray | None = None) -> float:
    """Instantaneous SINR of the common symbol at one user.

    gamma = a_c^2 |h p_c|^2 / (sum_i a_i^2 |h p_i|^2 + noise_var) on the
    user's common-decoding row h; all private streams interfere.
    """
    coeffs = _coeffs(a)
    rows = mapping.effective_rows(np.asarray(channel, dtype=complex))
    i = mapping.first_row_index_within_streams(user)
    h = rows[i]
    h_num = h if numerator_channel is None else \
        mapping.effective_rows(np.asarray(numerator_channel, dtype=complex))[i]
    signal = coeffs[0] ** 2 * np.abs(h_num @ precoders.common) ** 2
    interference = float(np.sum(coeffs[1:] ** 2 * np.abs(h @ precoders.private) ** 2))
    return float(signal / (interference + noise_var))


def sinr_private(stream: int, channel: np.ndarray, precoders: PrecoderSet, a, noise_var: float,
                 mapping: StreamMapping, numerator_channel: np.ndarray | None = None) -> float:
    """Instantaneous SINR of one private stream after common-symbol removal."""
    coeffs = _coeffs(a)
    rows = mapping.effective_rows(np.asarray(channel, dtype=complex))
    h = rows[stream]
    h_num = h if numerator_channel is None else \
        mapping.effective_rows(np.asarray(numerator_channel, dtype=complex))[stream]
    gains = np.abs(h @ precoders.private) ** 2
    signal = coeffs[1 + stream] ** 2 * np.abs(h_num @ precoders.private[:, stream]) ** 2
    interference = float(np.sum(coeffs[1:] ** 2 * gains)) - coeffs[1 + stream] ** 2 * gains[stream]
    return float(signal / (interference + noise_var))


def instantaneous_rates(channel: np.ndarray, precoders: PrecoderSet, a, noise_var: float,
                        mapping: StreamMapping, numerator_channel: np.ndarray | None = None):
    """log2(1 + SINR) per user (common) and per stream (private)."""
    users = len(mapping.first_row_of_user)
    common = np.array([
        np.log2(1.0 + sinr_common(k, channel, precoders, a, noise_var, mapping, numerator_channel))
        for k in range(users)
    ])
    private = np.array([
        np.log2(1.0 + sinr_private(s, channel, precoders, a, noise_var, mapping, numerator_channel))
        for s in range(mapping.n_streams)
    ])
    return common, private


@dataclass
class AllocationContext:
    """Everything an allocation scheme may consult for one channel draw.

    Schemes only see transmitter-side information: the estimate, the
    precoders, the estimate-sourced coupling table, a per-trial random
    substream, and `asr_metric`, which scores a candidate allocation by
    its conditional average sum rate over a dedicated set of
    estimation-error draws (distinct from the scoring draws).
    """

    cfg: SystemConfig
    trial_index: int
    estimate: np.ndarray
    estimate_rows: np.ndarray
    precoders: PrecoderSet
    coupling: CouplingTable
    rng: np.random.Generator
    asr_metric: Callable


@dataclass(frozen=True)
class RateReport:
    """Nested-Monte-Carlo rate summary.

    common_rate_per_user[t, k] and private_rate_per_stream[t, s] hold the
    conditional (inner-loop averaged) rates of channel draw t; avg_common
    and avg_private are their means over channel draws, and

        ergodic_sum_rate = min_k avg_common[k] + sum_s avg_private[s].
    """

    common_rate_per_user: np.ndarray
    private_rate_per_stream: np.ndarray
    avg_common: np.ndarray
    avg_private: np.ndarray
    ergodic_sum_rate: float
    n_channel_draws: int
    n_error_draws: int
    mean_common_power: float
    mean_common_fraction: float
    n_failures: int


def _trial_rates(cfg: SystemConfig, precoder_kind: str, allocator, trial: int, n_errors: int,
                 seed: int, use_estimate_numerator: bool):
    """Conditional rates of one channel draw; pure in all arguments."""
    mapping = cfg.stream_mapping()
    m = mapping.n_streams
    realization = generate_channel(dataclasses.replace(cfg, master_seed=seed), trial)
    est_rows = mapping.effective_rows(realization.estimate)
    pset = make_precoder_set(precoder_kind, est_rows, cfg.noise_var, cfg.total_power,
                             full_estimate=realization.estimate)
    ct = build_coupling(est_rows, pset, source="estimate")
    common_rows = np.array([mapping.first_row_index_within_streams(k) for k in range(cfg.users)])

    err_rng = channel_rng(seed, trial, 1)
    err = draw_complex_gaussian(err_rng, (n_errors, m, cfg.n_tx), cfg.err_var)
    true_rows = est_rows[None, :, :] + err
    phis = true_rows @ pset.private
    phics = true_rows @ pset.common

    sel_cache = {}

    def asr_metric(a):
        if "phis" not in sel_cache:
            sel_rng = channel_rng(seed, trial, 2)
            sel_err = draw_complex_gaussian(sel_rng, (n_errors, m, cfg.n_tx), cfg.err_var)
            sel_rows = est_rows[None, :, :] + sel_err
            sel_cache["phis"] = sel_rows @ pset.private
            sel_cache["phics"] = sel_rows @ pset.common
        rc, rp = _batch_rates(sel_cache["phis"], sel_cache["phics"], _coeffs(a),
                              cfg.noise_var, common_rows)
        return float(np.min(rc.mean(axis=0)) + rp.mean(axis=0).sum())

    ctx = AllocationContext(
        cfg=cfg, trial_index=trial, estimate=realization.estimate, estimate_rows=est_rows,
        precoders=pset, coupling=ct, rng=channel_rng(seed, trial, 3), asr_metric=asr_metric,
    )
    try:
        a = allocator(ctx)
    except Exception:
        return None
    coeffs = _coeffs(a)
    if use_estimate_numerator:
        num_phis = np.broadcast_to(est_rows @ pset.private, phis.shape)
        num_phics = np.broadcast_to(est_rows @ pset.common, phics.shape)
    else:
        num_phis = num_phics = None
    rc, rp = _batch_rates(phis, phics, coeffs, cfg.noise_var, common_rows, num_phis, num_phics)
    common_power = float(coeffs[0] ** 2)
    total = float(np.sum(coeffs**2))
    fraction = common_power / total if total > 0 else 0.0
    return rc.mean(axis=0), rp.mean(axis=0), common_power, fraction


def ergodic_sum_rate(cfg: SystemConfig, precoder_kind: str, allocator, n_channels: int,
                     n_errors: int, seed: int | None = None, jobs: int = 1,
                     use_estimate_numerator: bool = False) -> RateReport:
    """Two-stage Monte Carlo: channels outside, estimation errors inside.

    `allocator` maps an :class:`AllocationContext` to a PowerVector and
    runs on the estimate only.  Allocator failures skip the draw and are
    counted in the report.  Results are deterministic in (cfg, seed) and
    independent of `jobs`: every trial uses counter-derived substreams
    and aggregation happens in trial order.
    """
    if n_channels < 1 or n_errors < 1:
        raise DomainError("n_channels and n_errors must be at least 1")
    seed = cfg.master_seed if seed is None else int(seed)
    args = [(cfg, precoder_kind, allocator, t, n_errors, seed, use_estimate_numerator)
            for t in range(n_channels)]
    if jobs > 1:
        chunk = max(1, n_channels // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_rates_star, args, chunksize=chunk))
    else:
        results = [_trial_rates(*a) for a in args]

    kept = [r for r in results if r is not None]
    n_failures = len(results) - len(kept)
    if not kept:
        raise DomainError("every channel draw failed; nothing to average")
    common = np.stack([r[0] for r in kept])
    private = np.stack([r[1] for r in kept])
    powers = np.array([r[2] for r in kept])
    fractions = np.array([r[3] for r in kept])
    avg_common = common.mean(axis=0)
    avg_private = private.mean(axis=0)
    return RateReport(
        common_rate_per_user=common,
        private_rate_per_stream=private,
        avg_common=avg_common,
        avg_private=avg_private,
        ergodic_sum_rate=float(np.min(avg_common) + np.sum(avg_private)),
        n_channel_draws=n_channels,
        n_error_draws=n_errors,
        mean_common_power=float(powers.mean()),
        mean_common_fraction=float(fractions.mean()),
        n_failures=n_failures,
    )


def _trial_rates_star(args):
    return _trial_rates(*args)


def conventional_sum_rate(cfg: SystemConfig, precoder_kind: str, n_channels: int,
                          n_errors: int, seed: int | None = None) -> float:
    """Ergodic sum rate of the plain multiuser downlink (no common stream).

    Uniform power over the private streams, computed through the
    conventional per-stream SINR directly; shares the channel and error
    substreams with :func:`ergodic_sum_rate` so the two are comparable
    draw for draw.
    """
    mapping = cfg.stream_mapping()
    m = mapping.n_streams
    seed = cfg.master_seed if seed is None else int(seed)
    amp = np.sqrt(cfg.total_power / m)
    per_stream = []
    for trial in range(n_channels):
        realization = generate_channel(dataclasses.replace(cfg, master_seed=seed), trial)
        est_rows = mapping.effective_rows(realization.estimate)
        pset = make_precoder_set(precoder_kind, est_rows, cfg.noise_var, cfg.total_power,
                                 full_estimate=realization.estimate)
        err_rng = channel_rng(seed, trial, 1)
        err = draw_complex_gaussian(err_rng, (n_errors, m, cfg.n_tx), cfg.err_var)
        gains = np.abs((est_rows[None, :, :] + err) @ pset.private) ** 2   # (D, M, M)
        rows = np.arange(m)
        own = amp**2 * gains[:, rows, rows]
        interference = amp**2 * (np.sum(gains, axis=2) - gains[:, rows, rows])
        rates = np.log2(1.0 + own / (interference + cfg.noise_var))
        per_stream.append(rates.mean(axis=0))
    return float(np.sum(np.mean(per_stream, axis=0)))


def spearman_rank_correlation(x, y) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise DomainError("need two equally sized vectors with at least 2 entries")

    def ranks(v):
        order = np.argsort(v, kind="mergesort")
        r = np.empty(v.size)
        i = 0
        while i < v.size:
            j = i
            while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
                j += 1
            r[order[i:j + 1]] = 0.5 * (i + j) + 1.0
            i = j + 1
        return r

    rx, ry = ranks(x), ranks(y)
    sx, sy = np.std(rx), np.std(ry)
    if sx == 0 or sy == 0:
        return 0.0
    return float(np.mean((rx - np.mean(rx)) * (ry - np.mean(ry))) / (sx * sy))
