"""System model: scenario configuration, channel generation, transmit signal.

Downlink with an ``n_tx``-antenna transmitter serving ``users`` receivers.
User k has ``rx_antennas_per_user[k]`` antennas and is assigned
``streams_per_user[k]`` private streams; one extra common stream is
superimposed on top of all private streams.  The true channel splits as

    H = H_est + H_err

where the transmitter only knows the estimate.  Channel entries are unit
variance: estimate entries are CN(0, 1 - err_var) and error entries are
CN(0, err_var), so every row e of the error satisfies E[e^H e] = err_var * I.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from rspower.errors import ConfigurationError, DomainError


def draw_complex_gaussian(rng: np.random.Generator, shape, var: float) -> np.ndarray:
    """I.i.d. circular complex Gaussian entries with per-entry variance `var`."""
    if var < 0:
        raise DomainError(f"variance must be nonnegative, got {var}")
    if var == 0.0:
        return np.zeros(shape, dtype=complex)
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions, powers, variances and seed defining one scenario.

    total_power is the transmit power budget; with unit-norm precoder
    columns the deployed allocation satisfies sum_i a_i^2 = total_power.
    SNR is total_power / noise_var (noise_var defaults to 1 so the SNR
    sweep is a total_power sweep).
    """

    n_tx: int
    users: int
    rx_antennas_per_user: tuple[int, ...]
    streams_per_user: tuple[int, ...] = ()
    noise_var: float = 1.0
    err_var: float = 0.0
    total_power: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        streams = tuple(self.streams_per_user) or tuple(self.rx_antennas_per_user)
        object.__setattr__(self, "rx_antennas_per_user", tuple(self.rx_antennas_per_user))
        object.__setattr__(self, "streams_per_user", streams)
        if self.n_tx < 1 or self.users < 1:
            raise ConfigurationError("n_tx and users must be at least 1")
        if len(self.rx_antennas_per_user) != self.users:
            raise ConfigurationError("rx_antennas_per_user must have one entry per user")
        if len(self.streams_per_user) != self.users:
            raise ConfigurationError("streams_per_user must have one entry per user")
        if any(n < 1 for n in self.rx_antennas_per_user):
            raise ConfigurationError("every user needs at least one receive antenna")
        if any(m < 0 for m in self.streams_per_user):
            raise ConfigurationError("stream counts must be nonnegative")
        if any(m > n for m, n in zip(self.streams_per_user, self.rx_antennas_per_user)):
            raise ConfigurationError("streams_per_user may not exceed rx_antennas_per_user")
        if self.n_streams < 1:
            raise ConfigurationError("at least one private stream is required")
        if self.n_streams > self.n_rx_total:
            raise ConfigurationError("total streams may not exceed total receive antennas")
        if self.noise_var <= 0:
            raise ConfigurationError("noise_var must be positive")
        if not 0.0 <= self.err_var < 1.0:
            raise ConfigurationError("err_var must lie in [0, 1)")
        if self.total_power <= 0:
            raise ConfigurationError("total_power must be positive")
        if self.master_seed < 0:
            raise ConfigurationError("master_seed must be nonnegative")

    @property
    def n_rx_total(self) -> int:
        return int(sum(self.rx_antennas_per_user))

    @property
    def n_streams(self) -> int:
        return int(sum(self.streams_per_user))

    @property
    def snr_db(self) -> float:
        return float(10.0 * np.log10(self.total_power / self.noise_var))

    def with_total_power(self, total_power: float) -> "SystemConfig":
        return dataclasses.replace(self, total_power=total_power)

    def with_err_var(self, err_var: float) -> "SystemConfig":
        return dataclasses.replace(self, err_var=err_var)

    def stream_mapping(self) -> "StreamMapping":
        return StreamMapping.from_config(self)


@dataclass(frozen=True)
class StreamMapping:
    """Stream-to-receive-row bookkeeping.

    The MSE objective and per-stream SINRs index one receive antenna per
    private stream.  Per user we assign its streams to the first rows of
    its channel block (no receive combining).  The common symbol of user
    k is decoded on the user's first assigned row.
    """

    row_of_stream: tuple[int, ...]
    user_of_stream: tuple[int, ...]
    first_row_of_user: tuple[int, ...]

    @classmethod
    def from_config(cls, cfg: SystemConfig) -> "StreamMapping":
        rows, users, first = [], [], []
        offset = 0
        for k, (n_k, m_k) in enumerate(zip(cfg.rx_antennas_per_user, cfg.streams_per_user)):
            first.append(offset)
            for s in range(m_k):
                rows.append(offset + s)
                users.append(k)
            offset += n_k
        return cls(tuple(rows), tuple(users), tuple(first))

    @property
    def n_streams(self) -> int:
        return len(self.row_of_stream)

    def effective_rows(self, channel: np.ndarray) -> np.ndarray:
        """Rows of `channel` that carry a private stream, in stream order."""
        return channel[list(self.row_of_stream), :]

    def first_row_index_within_streams(self, user: int) -> int:
        """Index, within the effective-row matrix, of a user's common-decoding row."""
        return self.user_of_stream.index(user)


@dataclass(frozen=True)
class ChannelRealization:
    """True channel, transmitter-side estimate and estimation error.

    The stored error is true_channel - estimate evaluated in floating
    point, so the reconstruction true - estimate - error is bitwise zero.
    """

    true_channel: np.ndarray
    estimate: np.ndarray
    error: np.ndarray

    def __post_init__(self):
        if self.true_channel.shape != self.estimate.shape or self.estimate.shape != self.error.shape:
            raise ConfigurationError("channel, estimate and error must share a shape")


def channel_rng(master_seed: int, trial_index: int, *stream: int) -> np.random.Generator:
    """Counter-based substream: deterministic and order independent across trials."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial_index, *stream)))


def generate_channel(cfg: SystemConfig, trial_index: int) -> ChannelRealization:
    """Draw one flat Rayleigh channel and its imperfect estimate.

    Estimate entries are CN(0, 1 - err_var), error entries CN(0, err_var);
    the true channel is their exact sum, so its entries are CN(0, 1).
    Deterministic given (cfg.master_seed, trial_index).
    """
    if trial_index < 0:
        raise ConfigurationError("trial_index must be nonnegative")
    rng = channel_rng(cfg.master_seed, trial_index, 0)
    shape = (cfg.n_rx_total, cfg.n_tx)
    estimate = draw_complex_gaussian(rng, shape, 1.0 - cfg.err_var)
    error = draw_complex_gaussian(rng, shape, cfg.err_var)
    true_channel = estimate + error
    # Re-derive the error so true - estimate - error is bitwise zero.
    return ChannelRealization(true_channel=true_channel, estimate=estimate,
                              error=true_channel - estimate)


@dataclass(frozen=True)
class TransformMatrix:
    """Stacks the summed common observation on top of the per-antenna ones.

    For an M-antenna observation y, (T y)[0] = sum_i y_i and the remaining
    entries reproduce y, so the combined vector aligns with the length
    M + 1 symbol vector [s_c, s_1, ..., s_M].
    """

    entries: np.ndarray

    @property
    def n_streams(self) -> int:
        return self.entries.shape[1]

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Combined observation T @ y; supports batches with trailing axis M."""
        y = np.asarray(y)
        if y.shape[-1] != self.n_streams:
            raise DomainError(
                f"observation has {y.shape[-1]} entries, transform expects {self.n_streams}"
            )
        return y @ self.entries.T


def build_transform(m: int) -> TransformMatrix:
    """(m+1) x m combining matrix: a row of ones above the m x m identity."""
    if m < 1:
        raise DomainError(f"stream count must be at least 1, got {m}")
    entries = np.vstack([np.ones((1, m)), np.eye(m)])
    return TransformMatrix(entries=entries)


def transmit_signal(precoders, power: np.ndarray, symbols: np.ndarray) -> np.ndarray:
    """Superimpose the scaled common and private symbols on the antennas.

    Returns a_c s_c p_c + sum_m a_m s_m p_m for the length M + 1 amplitude
    vector `power` = [a_c, a_1, ..., a_M] and symbol vector `symbols`.
    """
    power = np.asarray(power, dtype=float)
    symbols = np.asarray(symbols)
    m = precoders.n_streams
    if power.shape != (m + 1,) or symbols.shape != (m + 1,):
        raise DomainError(
            f"power and symbols must have length {m + 1}, got {power.shape} and {symbols.shape}"
        )
    weights = power * symbols
    return precoders.common * weights[0] + precoders.private @ weights[1:]
