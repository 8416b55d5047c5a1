import numpy as np
import pytest

from rspower import SystemConfig, build_coupling, generate_channel, make_precoder_set
from rspower.objective import CouplingTable
from rspower.precoders import PrecoderSet


def square_instance(trial=0, err_var=0.1, kind="zf", n=4, seed=7, total_power=None):
    """One n x n scenario (n single-antenna users) with built precoders."""
    cfg = SystemConfig(
        n_tx=n, users=n, rx_antennas_per_user=(1,) * n, noise_var=1.0,
        err_var=err_var, total_power=float(n) if total_power is None else total_power,
        master_seed=seed,
    )
    realization = generate_channel(cfg, trial)
    pset = make_precoder_set(kind, realization.estimate, cfg.noise_var, cfg.total_power)
    return cfg, realization, pset


def estimate_table(trial=0, err_var=0.1, kind="zf", n=4, seed=7):
    cfg, realization, pset = square_instance(trial, err_var, kind, n, seed)
    return cfg, pset, build_coupling(realization.estimate, pset, source="estimate")


def identity_precoders(n):
    """Orthonormal columns: private = I, common = e_1."""
    return PrecoderSet(common=np.eye(n, dtype=complex)[:, 0],
                       private=np.eye(n, dtype=complex), kind="zf")


def scalar_table(phi=1.0, phi_c=1.0, source="estimate"):
    """Single-stream synthetic coupling table."""
    return CouplingTable.from_products(
        phi_private=np.array([[phi]], dtype=complex),
        phi_common=np.array([phi_c], dtype=complex),
        source=source,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
