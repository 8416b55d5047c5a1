"""Self-checks wiring the closed forms to their independent oracles.

Used by the CLI ``validate`` subcommand and reused by the test suite.
Each check returns (name, passed, detail); all of them are deterministic
for a given seed.
"""

from __future__ import annotations

import numpy as np

from rspower.alloc import step_bounds
from rspower.model import SystemConfig, generate_channel
from rspower.objective import (
    build_coupling,
    grad_apa,
    grad_apar,
    mse_apa,
    mse_apar,
    mse_oracle,
    mse_oracle_robust,
    unconstrained_minimizer,
)
from rspower.precoders import PRECODER_KINDS, make_precoder_set


def _instances(n_instances, seed, err_var=0.1, n=4, kinds=PRECODER_KINDS):
    """Square n x n scenarios cycling through the precoder kinds."""
    for i in range(n_instances):
        cfg = SystemConfig(n_tx=n, users=n, rx_antennas_per_user=(1,) * n,
                           noise_var=1.0, err_var=err_var, total_power=float(n),
                           master_seed=seed)
        realization = generate_channel(cfg, i)
        kind = kinds[i % len(kinds)]
        pset = make_precoder_set(kind, realization.estimate, cfg.noise_var, cfg.total_power)
        yield cfg, realization, pset


def check_gradients(n_instances: int = 20, seed: int = 11, h: float = 1e-6,
                    rtol: float = 1e-6):
    """Analytic gradients against central finite differences of the MSE."""
    worst = 0.0
    rng = np.random.default_rng(seed)
    for idx, (cfg, realization, pset) in enumerate(_instances(n_instances, seed)):
        err_var = 0.0 if idx % 2 == 0 else cfg.err_var
        ct = build_coupling(realization.estimate, pset, source="estimate")
        a = np.abs(rng.standard_normal(pset.n_streams + 1))
        grad = grad_apar(a, ct, err_var) if err_var > 0 else grad_apa(a, ct)

        def f(vec):
            if err_var > 0:
                return mse_apar(vec, ct, err_var, cfg.noise_var)
            return mse_apa(vec, ct, cfg.noise_var)

        for i in range(a.size):
            e = np.zeros(a.size)
            e[i] = h
            fd = (f(a + e) - f(a - e)) / (2.0 * h)
            worst = max(worst, abs(fd - grad[i]) / max(1.0, abs(grad[i])))
    return "gradient-vs-finite-difference", worst < rtol, f"worst relative error {worst:.3e}"


def check_oracle(n_instances: int = 4, seed: int = 23, n_draws: int = 100_000,
                 sigmas: float = 3.0):
    """Closed-form MSEs against the Monte-Carlo oracle within 3 standard errors."""
    worst = 0.0
    rng = np.random.default_rng(seed)
    for cfg, realization, pset in _instances(n_instances, seed):
        a = np.abs(rng.standard_normal(pset.n_streams + 1))
        ct_true = build_coupling(realization.true_channel, pset, source="true")
        plain = mse_apa(a, ct_true, cfg.noise_var)
        est = mse_oracle(a, realization.true_channel, pset, cfg.noise_var, n_draws,
                         seed=int(rng.integers(2**31)))
        worst = max(worst, abs(plain - est.mean) / est.stderr)
        ct_est = build_coupling(realization.estimate, pset, source="estimate")
        robust = mse_apar(a, ct_est, cfg.err_var, cfg.noise_var)
        est_r = mse_oracle_robust(a, realization.estimate, pset, cfg.noise_var, cfg.err_var,
                                  n_draws, seed=int(rng.integers(2**31)))
        worst = max(worst, abs(robust - est_r.mean) / est_r.stderr)
    return "closed-form-vs-oracle", worst < sigmas, f"worst deviation {worst:.2f} standard errors"


def check_reduction(n_instances: int = 6, seed: int = 31):
    """With err_var = 0 the robust objective and gradient equal the plain ones."""
    worst = 0.0
    rng = np.random.default_rng(seed)
    for cfg, realization, pset in _instances(n_instances, seed, err_var=0.0):
        ct = build_coupling(realization.estimate, pset, source="estimate")
        a = np.abs(rng.standard_normal(pset.n_streams + 1))
        worst = max(worst, abs(mse_apar(a, ct, 0.0, cfg.noise_var) - mse_apa(a, ct, cfg.noise_var)))
        worst = max(worst, float(np.max(np.abs(grad_apar(a, ct, 0.0) - grad_apa(a, ct)))))
    return "robust-reduces-to-plain", worst == 0.0, f"largest deviation {worst:.3e}"


def check_minimizer(n_instances: int = 10, seed: int = 47):
    """Gradient vanishes at the closed-form minimizer; bounds are positive."""
    worst = 0.0
    bounds_ok = True
    for idx, (cfg, realization, pset) in enumerate(_instances(n_instances, seed)):
        err_var = 0.0 if idx % 2 == 0 else cfg.err_var
        ct = build_coupling(realization.estimate, pset, source="estimate")
        opt = unconstrained_minimizer(ct, err_var)
        grad = grad_apar(opt.power, ct, err_var) if err_var > 0 else grad_apa(opt.power, ct)
        worst = max(worst, float(np.max(np.abs(grad))))
        sb = step_bounds(ct, "robust" if err_var > 0 else "plain", err_var)
        bounds_ok = bounds_ok and sb.mu_max_stable > 0 and np.all(opt.curvatures > 0)
    passed = worst < 1e-10 and bounds_ok
    return "minimizer-stationarity", passed, f"largest |gradient| {worst:.3e}"


ALL_CHECKS = (check_gradients, check_oracle, check_reduction, check_minimizer)


def run_all(verbose_print=None):
    """Run every check; returns the (name, passed, detail) triples."""
    results = []
    for check in ALL_CHECKS:
        name, passed, detail = check()
        results.append((name, passed, detail))
        if verbose_print is not None:
            verbose_print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return results
