import numpy as np
import pytest

from musm.channel import ChannelConfig, ChannelRealization, build_correlation_set, draw_channels
from musm.errors import BeamCountViolation, DimensionViolation, InsufficientSamples, RankDeficient, SingleUser, ZeroMatrix
from musm.precode import (
    beam_ccf_estimate,
    bd_precoder,
    channel_inversion_batch,
    channel_inversion_precoder,
    interference_matrix,
    max_beams,
    power_scaling,
)

from conftest import crandn


def random_users(rng, k, nr, nt):
    return ChannelRealization(crandn(rng, k, nr, nt))


class TestInterferenceMatrix:
    def test_two_users(self, rng):
        h = random_users(rng, 2, 2, 8)
        np.testing.assert_array_equal(interference_matrix(h, 1), h.per_user[1])

    def test_ordering(self, rng):
        h = random_users(rng, 4, 2, 8)
        out = interference_matrix(h, 2)
        assert out.shape == (6, 8)
        np.testing.assert_array_equal(out, np.vstack([h.per_user[0], h.per_user[2], h.per_user[3]]))

    def test_rows_never_from_own_user(self, rng):
        for _ in range(20):
            h = random_users(rng, 4, 2, 16)
            for k in range(1, 5):
                out = interference_matrix(h, k)
                own = {r.tobytes() for r in h.per_user[k - 1]}
                assert not own & {r.tobytes() for r in out}

    def test_single_user(self, rng):
        with pytest.raises(SingleUser):
            interference_matrix(random_users(rng, 1, 2, 8), 1)


class TestBdPrecoder:
    def test_j_k_reference_sizes(self):
        assert max_beams(64, 2, 4) == 58
        assert max_beams(64, 2, 16) == 34

    def test_beam_count_violation(self, rng):
        with pytest.raises(BeamCountViolation):
            bd_precoder(random_users(rng, 16, 2, 64), 58)
        with pytest.raises(BeamCountViolation):
            bd_precoder(random_users(rng, 2, 2, 8), 1)

    def test_dimension_violation(self, rng):
        with pytest.raises(DimensionViolation):
            bd_precoder(random_users(rng, 5, 2, 8), 2)

    @pytest.mark.parametrize("nt,nr,k", [(8, 2, 2), (16, 2, 4), (64, 2, 4), (64, 2, 16)])
    def test_nulling_and_orthonormality(self, nt, nr, k):
        r = np.random.default_rng(nt * 100 + k)
        n = min(max_beams(nt, nr, k), 32)
        for _ in range(100):
            h = random_users(r, k, nr, nt)
            p = bd_precoder(h, n)
            for kk in range(k):
                v = p.per_user_v[kk]
                np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-10)
                for j in range(k):
                    if j != kk:
                        leak = np.linalg.norm(h.per_user[j] @ v) / np.linalg.norm(h.per_user[j])
                        assert leak < 1e-9
            np.testing.assert_allclose(p.rho, 1 / np.sqrt(n), rtol=1e-12)

    def test_block_diagonal_response(self, rng):
        k, nr, nt, n = 4, 2, 16, 4
        h = random_users(rng, k, nr, nt)
        p = bd_precoder(h, n)
        v_all = np.concatenate(list(p.per_user_v), axis=1)  # (nt, k*n)
        resp = h.stacked @ v_all
        scale = np.linalg.norm(resp)
        for i in range(k):
            for j in range(k):
                block = resp[i * nr:(i + 1) * nr, j * n:(j + 1) * n]
                if i != j:
                    assert np.linalg.norm(block) < 1e-9 * scale
                else:
                    np.testing.assert_allclose(block, p.effective[i], atol=1e-12)

    def test_deterministic_and_sign_convention(self, rng):
        h = random_users(rng, 4, 2, 64)
        a, b = bd_precoder(h, 32), bd_precoder(h, 32)
        assert a.per_user_v.tobytes() == b.per_user_v.tobytes()
        for v in a.per_user_v:
            for col in v.T:
                first = col[np.argmax(np.abs(col) > 1e-12 * np.abs(col).max())]
                assert abs(first.imag) < 1e-12 and first.real > 0

    def test_single_user_identity(self, rng):
        p = bd_precoder(random_users(rng, 1, 2, 8), 4)
        np.testing.assert_array_equal(p.per_user_v[0], np.eye(8)[:, :4])

    def test_e_tr_scaling(self, rng):
        p = bd_precoder(random_users(rng, 2, 2, 8), 4, e_tr=4.0)
        np.testing.assert_allclose(p.rho, 1.0)


class TestPowerScaling:
    def test_orthonormal(self):
        v = np.eye(8)[:, :4]
        assert power_scaling(v, 1.0) == pytest.approx(0.5)

    def test_n32(self):
        assert power_scaling(np.eye(64)[:, :32], 1.0) == pytest.approx(0.1767766952966369, rel=1e-14)

    def test_homogeneity(self, rng):
        v = crandn(rng, 8, 3)
        assert power_scaling(2 * v, 1.0) == pytest.approx(power_scaling(v, 1.0) / 2)

    def test_zero(self):
        with pytest.raises(ZeroMatrix):
            power_scaling(np.zeros((4, 2)), 1.0)


class TestChannelInversion:
    def test_identity(self):
        w, rho = channel_inversion_precoder(np.eye(4), 4.0)
        np.testing.assert_allclose(w, np.eye(4), atol=1e-15)
        assert rho == pytest.approx(1.0)

    def test_random_scaled_identity(self, rng):
        h = crandn(rng, 4, 64)
        w, rho = channel_inversion_precoder(h, 4.0)
        assert np.linalg.norm(h @ w - rho * np.eye(4)) < 1e-9 * rho
        assert np.sum(np.abs(w) ** 2) == pytest.approx(4.0)

    def test_power_homogeneity(self, rng):
        h = crandn(rng, 4, 16)
        _, r1 = channel_inversion_precoder(h, 2.0)
        _, r2 = channel_inversion_precoder(h, 4.0)
        assert r2 == pytest.approx(np.sqrt(2) * r1)

    def test_batch_matches_single(self, rng):
        h = crandn(rng, 5, 4, 16)
        rho = channel_inversion_batch(h, 4.0)
        for hb, rb in zip(h, rho):
            assert rb == pytest.approx(channel_inversion_precoder(hb, 4.0)[1], rel=1e-12)

    def test_rank_deficient(self):
        h = np.ones((2, 4))
        with pytest.raises(RankDeficient):
            channel_inversion_precoder(h, 1.0)


class TestBeamCcf:
    def setup_precoder(self, rho_tx, beta):
        cfg = ChannelConfig(n_tx=16, n_rx=2, n_users=2, rho_tx=rho_tx, rho_rx=0.0, beta_tx=beta)
        corr = build_correlation_set(cfg)
        h = draw_channels(corr, 2, np.random.default_rng(11))
        return corr, bd_precoder(h, 4)

    def test_uncorrelated_tx_near_zero(self):
        corr, p = self.setup_precoder(0.0, 0.3)
        est = beam_ccf_estimate(corr, p, 1, 2, 100_000, rng=3)
        assert abs(est) < 0.02

    def test_self(self):
        corr, p = self.setup_precoder(0.0, 0.3)
        assert beam_ccf_estimate(corr, p, 2, 2, 10_000) == 1.0

    def test_correlated_recorded(self):
        corr, p = self.setup_precoder(0.9, 0.0)
        est = beam_ccf_estimate(corr, p, 1, 2, 100_000, rng=3)
        # reference: the expectation v_i^H R v_k normalized; the estimator tracks it
        v = p.per_user_v[0]
        r = v.conj().T @ corr.r_tx_eff @ v
        ref = r[0, 1] / np.sqrt(r[0, 0].real * r[1, 1].real)
        assert abs(est - np.conj(ref)) < 0.02 or abs(est - ref) < 0.02

    def test_insufficient(self):
        corr, p = self.setup_precoder(0.0, 0.3)
        with pytest.raises(InsufficientSamples):
            beam_ccf_estimate(corr, p, 1, 2, 100)
