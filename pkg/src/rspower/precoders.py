"""Linear precoders: MF / ZF / MMSE private columns and the SVD common column.

All precoders are built from the channel estimate only (the transmitter
never sees the estimation error) and every column is normalized to unit
Euclidean norm, so allocated amplitudes fully determine transmit power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rspower.errors import DomainError, SingularChannelError

PRECODER_KINDS = ("mf", "zf", "mmse")

# Relative condition-number ceiling for the ZF gram inverse.
_ZF_RCOND = 1e12


@dataclass(frozen=True)
class PrecoderSet:
    """Unit-norm common column plus one unit-norm private column per stream."""

    common: np.ndarray
    private: np.ndarray
    kind: str

    def __post_init__(self):
        if self.common.ndim != 1 or self.private.ndim != 2:
            raise DomainError("common must be a vector and private a matrix")
        if self.private.shape[0] != self.common.shape[0]:
            raise DomainError("common and private precoders must share the antenna count")

    @property
    def n_tx(self) -> int:
        return self.common.shape[0]

    @property
    def n_streams(self) -> int:
        return self.private.shape[1]

    @property
    def column_norms_sq(self) -> np.ndarray:
        """Squared norms ordered [common, stream 1, ..., stream M]."""
        return np.concatenate(
            [[np.vdot(self.common, self.common).real], np.sum(np.abs(self.private) ** 2, axis=0)]
        )


def _normalize_columns(p: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(p, axis=0)
    if np.any(norms < 1e-300):
        raise SingularChannelError("precoder produced a zero column")
    return p / norms


def make_private_precoder(kind: str, estimate: np.ndarray, noise_var: float = 1.0,
                          total_power: float = 1.0) -> np.ndarray:
    """Column-normalized private precoder from the channel estimate.

    mf    H^H
    zf    H^H (H H^H)^{-1}            (needs full row rank, M <= n_tx)
    mmse  H^H (H H^H + (M noise_var / total_power) I)^{-1}

    `estimate` holds one row per private stream (M x n_tx).
    """
    if kind not in PRECODER_KINDS:
        raise DomainError(f"unknown precoder kind {kind!r}, expected one of {PRECODER_KINDS}")
    estimate = np.asarray(estimate, dtype=complex)
    if estimate.ndim != 2:
        raise DomainError("estimate must be a matrix with one row per stream")
    m, n_tx = estimate.shape
    if kind == "mf":
        return _normalize_columns(estimate.conj().T)
    if m > n_tx and kind == "zf":
        raise DomainError(f"zero forcing needs at most n_tx={n_tx} streams, got {m}")
    gram = estimate @ estimate.conj().T
    if kind == "zf":
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > _ZF_RCOND:
            raise SingularChannelError(
                f"channel estimate is (numerically) rank deficient: cond(H H^H) = {cond:.3g}"
            )
        inv = np.linalg.inv(gram)
    else:
        loading = m * noise_var / total_power
        inv = np.linalg.inv(gram + loading * np.eye(m))
    return _normalize_columns(estimate.conj().T @ inv)


def make_common_precoder(estimate: np.ndarray, phase_rows: np.ndarray | None = None) -> np.ndarray:
    """Right singular vector of the estimate for its largest singular value.

    The singular vector's phase is free, so it is fixed deterministically:
    rotate so the summed coupling sum_i (H p_c)_i over `phase_rows`
    (default: all rows of `estimate`) is real and nonnegative.  This keeps
    results backend independent and gives the common stream a nonnegative
    linear gain in the MSE objective; when that sum vanishes, fall back to
    making the first nonzero entry of the vector real and nonnegative.
    """
    estimate = np.asarray(estimate, dtype=complex)
    if estimate.ndim != 2:
        raise DomainError("estimate must be a matrix")
    if not np.any(np.abs(estimate) > 0):
        raise DomainError("common precoder undefined for an all-zero estimate")
    _, _, vh = np.linalg.svd(estimate)
    pc = vh[0, :].conj()
    rows = estimate if phase_rows is None else np.asarray(phase_rows, dtype=complex)
    z = np.sum(rows @ pc)
    if abs(z) > 1e-12:
        pc = pc * (z.conjugate() / abs(z))
    else:
        nz = np.flatnonzero(np.abs(pc) > 1e-12)
        lead = pc[nz[0]]
        pc = pc * (lead.conjugate() / abs(lead))
    return pc / np.linalg.norm(pc)


def make_precoder_set(kind: str, estimate_rows: np.ndarray, noise_var: float = 1.0,
                      total_power: float = 1.0, full_estimate: np.ndarray | None = None) -> PrecoderSet:
    """Bundle the private and common precoders for one channel estimate.

    `estimate_rows` holds the effective (stream-assigned) rows used for
    the private design and the common phase convention; `full_estimate`,
    when given, supplies the matrix whose SVD defines the common column.
    """
    private = make_private_precoder(kind, estimate_rows, noise_var, total_power)
    basis = estimate_rows if full_estimate is None else full_estimate
    common = make_common_precoder(basis, phase_rows=estimate_rows)
    return PrecoderSet(common=common, private=private, kind=kind)
