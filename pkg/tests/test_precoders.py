import numpy as np
import pytest

from rspower import DomainError, SingularChannelError
from rspower.model import draw_complex_gaussian
from rspower.precoders import (
    PRECODER_KINDS,
    make_common_precoder,
    make_precoder_set,
    make_private_precoder,
)


def _random_estimate(rng, m=4, n=4):
    return draw_complex_gaussian(rng, (m, n), 1.0)


class TestPrivatePrecoders:
    def test_identity_channel_zf_and_mf(self):
        eye = np.eye(4, dtype=complex)
        for kind in ("zf", "mf"):
            p = make_private_precoder(kind, eye)
            assert np.allclose(p, eye, atol=1e-14)

    @pytest.mark.parametrize("kind", PRECODER_KINDS)
    def test_unit_columns(self, kind, rng):
        for _ in range(5):
            p = make_private_precoder(kind, _random_estimate(rng), 1.0, 4.0)
            assert np.max(np.abs(np.linalg.norm(p, axis=0) - 1.0)) < 1e-12

    def test_zf_inverts_channel_directionally(self, rng):
        # Before normalization H @ P_zf = I; columns are only rescaled, so
        # the off-diagonal entries of H @ P stay at numerical zero.
        est = _random_estimate(rng)
        prod = est @ make_private_precoder("zf", est)
        off = prod - np.diag(np.diag(prod))
        assert np.max(np.abs(off)) < 1e-10

    def test_zf_unnormalized_identity(self, rng):
        est = _random_estimate(rng)
        raw = est.conj().T @ np.linalg.inv(est @ est.conj().T)
        assert np.max(np.abs(est @ raw - np.eye(4))) < 1e-10

    def test_zf_rank_deficient_raises(self):
        est = np.ones((3, 4), dtype=complex)  # repeated rows
        with pytest.raises(SingularChannelError):
            make_private_precoder("zf", est)

    def test_zf_too_many_streams(self, rng):
        with pytest.raises(DomainError):
            make_private_precoder("zf", _random_estimate(rng, m=5, n=4))

    def test_mmse_handles_rank_deficiency(self):
        est = np.ones((3, 4), dtype=complex)
        p = make_private_precoder("mmse", est, 1.0, 4.0)
        assert np.max(np.abs(np.linalg.norm(p, axis=0) - 1.0)) < 1e-12

    def test_unknown_kind(self, rng):
        with pytest.raises(DomainError):
            make_private_precoder("dirty-paper", _random_estimate(rng))

    def test_in_phase_gain_positive(self, rng):
        # The stream's own coupling h_j . p_j is real positive for all kinds,
        # so the allocators always have a direction worth moving in.
        for kind in PRECODER_KINDS:
            for _ in range(5):
                est = _random_estimate(rng)
                p = make_private_precoder(kind, est, 1.0, 4.0)
                diag = np.diag(est @ p)
                assert np.all(np.real(diag) > 0)
                assert np.max(np.abs(np.imag(diag))) < 1e-10


class TestCommonPrecoder:
    def test_diagonal_channel(self):
        pc = make_common_precoder(np.diag([2.0, 1.0]).astype(complex))
        assert abs(abs(pc[0]) - 1.0) < 1e-12
        assert abs(pc[1]) < 1e-12

    def test_unit_norm(self, rng):
        for _ in range(5):
            pc = make_common_precoder(_random_estimate(rng))
            assert abs(np.linalg.norm(pc) - 1.0) < 1e-12

    def test_gain_matches_largest_singular_value(self, rng):
        # Independent oracle: singular values from the eigendecomposition
        # of H^H H rather than the SVD.
        est = _random_estimate(rng)
        pc = make_common_precoder(est)
        eigs = np.linalg.eigvalsh(est.conj().T @ est)
        assert abs(np.linalg.norm(est @ pc) - np.sqrt(eigs[-1])) < 1e-10

    def test_maximizes_gain_over_singular_basis(self, rng):
        est = _random_estimate(rng)
        pc = make_common_precoder(est)
        _, _, vh = np.linalg.svd(est)
        gains = [np.linalg.norm(est @ vh[i].conj()) for i in range(vh.shape[0])]
        assert np.linalg.norm(est @ pc) >= max(gains) - 1e-10

    def test_phase_convention_aligns_summed_coupling(self, rng):
        for _ in range(5):
            est = _random_estimate(rng)
            pc = make_common_precoder(est)
            z = np.sum(est @ pc)
            assert np.real(z) >= 0
            assert abs(np.imag(z)) < 1e-10 * max(1.0, abs(z))

    def test_reproducible(self, rng):
        est = _random_estimate(rng)
        assert np.array_equal(make_common_precoder(est), make_common_precoder(est))

    def test_zero_matrix_rejected(self):
        with pytest.raises(DomainError):
            make_common_precoder(np.zeros((3, 3), dtype=complex))


class TestPrecoderSet:
    def test_bundle_norms(self, rng):
        est = _random_estimate(rng)
        pset = make_precoder_set("mmse", est, 1.0, 4.0)
        assert np.max(np.abs(pset.column_norms_sq - 1.0)) < 1e-12
        assert pset.n_streams == 4 and pset.n_tx == 4

    def test_full_estimate_variant(self, rng):
        full = draw_complex_gaussian(rng, (6, 4), 1.0)
        pset = make_precoder_set("mf", full[:4], 1.0, 4.0, full_estimate=full)
        assert pset.common.shape == (4,)
        z = np.sum(full[:4] @ pset.common)
        assert np.real(z) >= 0
