"""Mean-square-error objectives for power allocation.

The receiver-side observation is combined by the transform of
:func:`rspower.model.build_transform`, so the error between the symbol
vector and the combined observation is

    eps = || s - T y ||^2,   s = [s_c, s_1, ..., s_M].

Averaging over unit-variance symbols and noise (and, for the robust
variant, over the channel-estimation error conditioned on the estimate)
gives closed forms that depend on the channel only through the coupling
coefficients phi(i, q) = h_i . p_q.  Writing

    S_j = sum_l |phi(l, j)|^2            per-stream received energy
    F_j = sum_{q<r} Re{phi(q,j)* phi(r,j)}   cross-antenna coupling
    R_j = Re{phi(j, j)}                  in-phase gain of stream j
    S_c, F^(c), R_c                      the analogues for the common column

both objectives are separable quadratics

    mse(a) = const + sum_i [ q_i a_i^2 - 2 r_i a_i ]

with q_c = 2 S_c + F^(c), q_j = 2 (S_j + F_j) for the plain objective;
the robust objective (conditioned on the estimate) adds
2 M err_var ||p_i||^2 to every q_i and nothing else.
const = M (1 + 2 noise_var) + 1 in both cases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from rspower.errors import DegenerateGeometryError, DomainError
from rspower.model import build_transform, draw_complex_gaussian

_SOURCES = ("estimate", "true")


@dataclass(frozen=True)
class PowerVector:
    """Amplitude per stream, ordered [a_c, a_1, ..., a_M]."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if coeffs.ndim != 1 or coeffs.size < 2:
            raise DomainError("power vector needs a common entry plus at least one stream")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def common(self) -> float:
        return float(self.coeffs[0])

    @property
    def private(self) -> np.ndarray:
        return self.coeffs[1:]

    @property
    def n_streams(self) -> int:
        return self.coeffs.size - 1

    @property
    def total_power(self) -> float:
        return float(np.sum(self.coeffs**2))

    @property
    def common_fraction(self) -> float:
        """Share of transmit power carried by the common stream."""
        total = self.total_power
        return float(self.coeffs[0] ** 2 / total) if total > 0 else 0.0

    def scaled_to(self, total_power: float) -> "PowerVector":
        """Rescale so the summed squared amplitudes equal `total_power`."""
        current = self.total_power
        if current == 0.0:
            raise DomainError("cannot rescale an all-zero power vector")
        return PowerVector(self.coeffs * np.sqrt(total_power / current))


@dataclass(frozen=True)
class CouplingTable:
    """Cached channel/precoder inner products feeding every closed form.

    phi_private[i, q] = h_i . p_q and phi_common[i] = h_i . p_c for the
    effective rows h_i.  cross_private[j] holds the antenna-pair sum F_j
    and cross_common the full off-diagonal sum F^(c) (both real).  The
    squared precoder column norms ride along for the robust terms, and
    `source` records whether the rows came from the estimate or the true
    channel.
    """

    phi_private: np.ndarray
    phi_common: np.ndarray
    cross_private: np.ndarray
    cross_common: float
    source: str
    norm_common_sq: float
    norm_private_sq: np.ndarray

    @property
    def n_streams(self) -> int:
        return self.phi_common.shape[0]

    @property
    def private_gain(self) -> np.ndarray:
        """S_j = sum_l |phi(l, j)|^2."""
        return np.sum(np.abs(self.phi_private) ** 2, axis=0)

    @property
    def private_linear(self) -> np.ndarray:
        """R_j = Re{phi(j, j)}."""
        return np.real(np.diag(self.phi_private))

    @property
    def common_gain(self) -> float:
        """S_c = sum_i |phi(i, c)|^2."""
        return float(np.sum(np.abs(self.phi_common) ** 2))

    @property
    def common_linear(self) -> float:
        """R_c = Re{sum_i phi(i, c)}."""
        return float(np.real(np.sum(self.phi_common)))

    @classmethod
    def from_products(cls, phi_private: np.ndarray, phi_common: np.ndarray,
                      source: str = "estimate", norm_common_sq: float = 1.0,
                      norm_private_sq: np.ndarray | None = None) -> "CouplingTable":
        """Build a table from given inner products, deriving the cross terms.

        Useful for synthetic instances; the cross sums are computed from
        their defining antenna pairs.
        """
        if source not in _SOURCES:
            raise DomainError(f"source must be one of {_SOURCES}, got {source!r}")
        phi_private = np.asarray(phi_private, dtype=complex)
        phi_common = np.asarray(phi_common, dtype=complex)
        m = phi_common.shape[0]
        if phi_private.shape != (m, m):
            raise DomainError(
                f"phi_private must be {m}x{m} to match phi_common, got {phi_private.shape}"
            )
        pair_mask = np.triu(np.ones((m, m), dtype=bool), k=1)
        pair_products = np.einsum("qj,rj->qrj", phi_private.conj(), phi_private)
        cross_private = np.real(np.sum(pair_products[pair_mask, :], axis=0)) if m > 1 \
            else np.zeros(m)
        outer_common = phi_common.conj()[:, None] * phi_common[None, :]
        cross_common = float(np.real(np.sum(outer_common) - np.trace(outer_common)))
        if norm_private_sq is None:
            norm_private_sq = np.ones(m)
        return cls(
            phi_private=phi_private,
            phi_common=phi_common,
            cross_private=cross_private,
            cross_common=cross_common,
            source=source,
            norm_common_sq=float(norm_common_sq),
            norm_private_sq=np.asarray(norm_private_sq, dtype=float),
        )


def build_coupling(channel: np.ndarray, precoders, source: str = "estimate",
                   rows: np.ndarray | None = None) -> CouplingTable:
    """Cache the inner products between channel rows and precoder columns.

    `channel` must provide one row per private stream; when it has more
    rows, `rows` selects the stream-assigned ones (default: the first M,
    matching the one-received-stream-per-indexed-antenna convention).
    """
    channel = np.asarray(channel, dtype=complex)
    if channel.ndim != 2:
        raise DomainError("channel must be a matrix")
    m = precoders.n_streams
    if channel.shape[1] != precoders.n_tx:
        raise DomainError(
            f"channel has {channel.shape[1]} columns but precoders expect {precoders.n_tx}"
        )
    if rows is not None:
        channel = channel[np.asarray(rows, dtype=int), :]
    if channel.shape[0] > m:
        channel = channel[:m, :]
    if channel.shape[0] != m:
        raise DomainError(f"need {m} channel rows for {m} streams, got {channel.shape[0]}")

    norms = precoders.column_norms_sq
    return CouplingTable.from_products(
        phi_private=channel @ precoders.private,
        phi_common=channel @ precoders.common,
        source=source,
        norm_common_sq=float(norms[0]),
        norm_private_sq=norms[1:],
    )


def _as_coeffs(a, m: int) -> np.ndarray:
    coeffs = a.coeffs if isinstance(a, PowerVector) else np.asarray(a, dtype=float)
    if coeffs.shape != (m + 1,):
        raise DomainError(f"power vector must have length {m + 1}, got {coeffs.shape}")
    return coeffs


def quadratic_coefficients(ct: CouplingTable, err_var: float = 0.0):
    """(q, r) with mse(a) = const + sum_i q_i a_i^2 - 2 r_i a_i.

    Ordered [common, stream 1, ..., stream M].  err_var > 0 selects the
    robust objective (conditioned on the estimate), which adds
    M err_var ||p_i||^2 inside every quadratic coefficient.
    """
    if err_var < 0:
        raise DomainError("err_var must be nonnegative")
    m = ct.n_streams
    q = np.empty(m + 1)
    r = np.empty(m + 1)
    q[0] = 2.0 * (ct.common_gain + m * err_var * ct.norm_common_sq) + ct.cross_common
    q[1:] = 2.0 * (ct.private_gain + ct.cross_private + m * err_var * ct.norm_private_sq)
    r[0] = ct.common_linear
    r[1:] = ct.private_linear
    return q, r


def _mse_quadratic(a, ct, noise_var, err_var):
    m = ct.n_streams
    coeffs = _as_coeffs(a, m)
    if noise_var < 0:
        raise DomainError("noise_var must be nonnegative")
    q, r = quadratic_coefficients(ct, err_var)
    const = m * (1.0 + 2.0 * noise_var) + 1.0
    return float(const + np.sum(q * coeffs**2 - 2.0 * r * coeffs))


def mse_apa(a, ct: CouplingTable, noise_var: float) -> float:
    """Closed-form MSE for the plain objective on the table's channel.

    Evaluate on a true-channel table for analysis or on an estimate table
    for what the transmitter can actually compute.
    """
    return _mse_quadratic(a, ct, noise_var, 0.0)


def mse_apar(a, ct: CouplingTable, err_var: float, noise_var: float) -> float:
    """Closed-form robust MSE conditioned on the estimate.

    Requires an estimate-sourced table; equals :func:`mse_apa` on the same
    table when err_var = 0.
    """
    if ct.source != "estimate":
        raise DomainError("the robust objective conditions on an estimate-sourced table")
    return _mse_quadratic(a, ct, noise_var, err_var)


def grad_apa(a, ct: CouplingTable) -> np.ndarray:
    """Gradient of :func:`mse_apa`; entry i depends linearly on a_i alone."""
    m = ct.n_streams
    coeffs = _as_coeffs(a, m)
    q, r = quadratic_coefficients(ct, 0.0)
    return 2.0 * q * coeffs - 2.0 * r


def grad_apar(a, ct: CouplingTable, err_var: float) -> np.ndarray:
    """Gradient of :func:`mse_apar`; reduces to :func:`grad_apa` at err_var = 0."""
    if ct.source != "estimate":
        raise DomainError("the robust gradient conditions on an estimate-sourced table")
    m = ct.n_streams
    coeffs = _as_coeffs(a, m)
    q, r = quadratic_coefficients(ct, err_var)
    return 2.0 * q * coeffs - 2.0 * r


class OracleEstimate(NamedTuple):
    """Monte-Carlo mean with its standard error."""

    mean: float
    stderr: float
    n_draws: int


def mse_oracle(a, channel_rows: np.ndarray, precoders, noise_var: float,
               n_draws: int = 100_000, seed: int = 0) -> OracleEstimate:
    """Brute-force MSE on a fixed channel: sample mean of ||s - T y||^2.

    Independent of the closed forms: draws symbols and noise, forms the
    transmit vector, passes it through the given channel rows and applies
    the combining transform.
    """
    if n_draws < 1:
        raise DomainError("n_draws must be at least 1")
    m = precoders.n_streams
    coeffs = _as_coeffs(a, m)
    channel_rows = np.asarray(channel_rows, dtype=complex)[:m, :]
    rng = np.random.default_rng(seed)
    transform = build_transform(m)
    s = draw_complex_gaussian(rng, (n_draws, m + 1), 1.0)
    noise = draw_complex_gaussian(rng, (n_draws, m), noise_var)
    stacked = np.concatenate([precoders.common[:, None], precoders.private], axis=1)
    x = (s * coeffs) @ stacked.T                     # transmit vectors, (n_draws, n_tx)
    y = x @ channel_rows.T + noise                   # per-antenna observations
    errs = np.sum(np.abs(s - transform.apply(y)) ** 2, axis=1)
    return OracleEstimate(float(np.mean(errs)), float(np.std(errs) / np.sqrt(n_draws)), n_draws)


def mse_oracle_robust(a, estimate_rows: np.ndarray, precoders, noise_var: float,
                      err_var: float, n_draws: int = 100_000, seed: int = 0) -> OracleEstimate:
    """Brute-force robust MSE: additionally redraws the channel error per sample.

    Estimates E[ ||s - T y||^2 | estimate ] with the true rows set to
    estimate + fresh error each draw.
    """
    if n_draws < 1:
        raise DomainError("n_draws must be at least 1")
    if err_var < 0:
        raise DomainError("err_var must be nonnegative")
    m = precoders.n_streams
    coeffs = _as_coeffs(a, m)
    estimate_rows = np.asarray(estimate_rows, dtype=complex)[:m, :]
    rng = np.random.default_rng(seed)
    transform = build_transform(m)
    s = draw_complex_gaussian(rng, (n_draws, m + 1), 1.0)
    noise = draw_complex_gaussian(rng, (n_draws, m), noise_var)
    err = draw_complex_gaussian(rng, (n_draws, m, estimate_rows.shape[1]), err_var)
    stacked = np.concatenate([precoders.common[:, None], precoders.private], axis=1)
    x = (s * coeffs) @ stacked.T
    y = x @ estimate_rows.T + np.einsum("dij,dj->di", err, x) + noise
    errs = np.sum(np.abs(s - transform.apply(y)) ** 2, axis=1)
    return OracleEstimate(float(np.mean(errs)), float(np.std(errs) / np.sqrt(n_draws)), n_draws)


@dataclass(frozen=True)
class UnconstrainedOptimum:
    """Per-coefficient minimizer of the separable quadratic objective.

    per_coefficient_min[i] is the minimum of q_i a^2 - 2 r_i a, i.e. the
    coefficient's contribution to the MSE at the optimum relative to a = 0;
    curvatures[i] is the (strictly positive) second derivative 2 q_i.
    """

    power: PowerVector
    per_coefficient_min: np.ndarray
    curvatures: np.ndarray


def unconstrained_minimizer(ct: CouplingTable, err_var: float = 0.0) -> UnconstrainedOptimum:
    """Closed-form minimizer a_i = r_i / q_i of the (robust) MSE.

    Because the objective is a separable quadratic, every coefficient
    minimizes independently; the gradient vanishes exactly at the result.
    Raises when any curvature is nonpositive (impossible for a nonzero
    channel, where q_i is a sum of squared magnitudes).
    """
    q, r = quadratic_coefficients(ct, err_var)
    if np.any(q <= 0):
        raise DegenerateGeometryError(
            f"nonpositive quadratic coefficient(s) {q[q <= 0]}; no unconstrained minimizer"
        )
    a = r / q
    return UnconstrainedOptimum(
        power=PowerVector(a),
        per_coefficient_min=-(r**2) / q,
        curvatures=2.0 * q,
    )
