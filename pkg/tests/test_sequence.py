import math

import numpy as np
import pytest

from conftest import make_cfg
from ionlockin import (SequenceConfig, UnsupportedSequence, build_timeline,
                       lockin_mu, theta_of_mu_closed, theta_of_mu_oracle,
                       theta_max_from_config)
from ionlockin.sequence import (NO_MODULATION, lineshape_scan,
                                oracle_quadrature_amp_phase, sinc, xi_line)

TWO_PI = 2.0 * math.pi


def lockin_sequence_cfg(m_segments, **kw):
    """Config whose 400 kHz drive sits exactly on a lock-in frequency
    (T + t_pi = 1.25125 ms puts 400 kHz at n = 500)."""
    return make_cfg(m_segments=m_segments, t_arm=1.25e-3, t_pi=1.25e-6, **kw)


class TestTimeline:
    def test_m2_structure(self):
        seq = SequenceConfig(m_segments=2, t_arm=1e-3, t_pi=5e-5)
        mu = TWO_PI * 1e3
        tl = build_timeline(seq, mu)
        assert len(tl.segments) == 4
        assert [w.spin_sign for w in tl.segments] == [1, -1, -1, 1]
        adv = mu * (seq.t_arm + seq.t_pi)
        offsets = [w.odf_phase_offset for w in tl.segments]
        assert offsets == pytest.approx([0.0, adv, adv, 2 * adv], rel=1e-14)
        # window start times from the pulse layout
        T, tp = seq.t_arm, seq.t_pi
        starts = [w.start_time for w in tl.segments]
        assert starts == pytest.approx([0.0, T + tp, 2 * T + tp, 3 * T + 2 * tp],
                                       rel=1e-14)

    def test_m1_single_echo(self):
        seq = SequenceConfig(m_segments=1, t_arm=1e-3, t_pi=0.0)
        mu = TWO_PI * 500.0
        tl = build_timeline(seq, mu)
        assert [w.spin_sign for w in tl.segments] == [1, -1]
        assert [w.odf_phase_offset for w in tl.segments] == pytest.approx(
            [0.0, mu * seq.t_arm])

    def test_m8_offsets_nondecreasing(self):
        seq = SequenceConfig(m_segments=8, t_arm=1.25e-3, t_pi=1.25e-6)
        mu = TWO_PI * 400e3
        tl = build_timeline(seq, mu)
        assert len(tl.segments) == 16
        offs = [w.odf_phase_offset for w in tl.segments]
        assert all(b >= a for a, b in zip(offs, offs[1:]))
        assert offs[-1] == pytest.approx(8 * mu * (seq.t_arm + seq.t_pi),
                                         rel=1e-14)

    def test_windows_ordered_nonoverlapping(self):
        seq = SequenceConfig(m_segments=8, t_arm=1.25e-3, t_pi=1.25e-6)
        tl = build_timeline(seq, TWO_PI * 400e3)
        for a, b in zip(tl.segments, tl.segments[1:]):
            gap = b.start_time - (a.start_time + a.duration)
            assert gap > -1e-12 * a.duration

    def test_sign_flips_at_pi_pulses_only(self):
        seq = SequenceConfig(m_segments=6, t_arm=1e-3, t_pi=1e-5)
        tl = build_timeline(seq, TWO_PI * 1e3)
        signs = [w.spin_sign for w in tl.segments]
        # within each segment the sign flips, across segment borders it holds
        for j in range(6):
            assert signs[2 * j + 1] == -signs[2 * j]
            if j:
                assert signs[2 * j] == signs[2 * j - 1]


class TestLockinMu:
    def test_one_ms_n0(self):
        seq = SequenceConfig(m_segments=2, t_arm=1e-3 - 1e-5, t_pi=1e-5)
        assert lockin_mu(seq, 0) == pytest.approx(TWO_PI * 500.0, rel=1e-12)

    def test_400khz_short_arm(self):
        seq = SequenceConfig(m_segments=2, t_arm=1.25e-6 - 1e-7, t_pi=1e-7)
        assert lockin_mu(seq, 0) == pytest.approx(TWO_PI * 400e3, rel=1e-12)

    def test_spacing(self):
        seq = SequenceConfig(m_segments=2, t_arm=0.9e-3, t_pi=1e-5)
        gap = TWO_PI / (seq.t_arm + seq.t_pi)
        for n in range(4):
            assert lockin_mu(seq, n + 1) - lockin_mu(seq, n) == pytest.approx(
                gap, rel=1e-12)

    def test_default_sequence_hits_400khz(self):
        seq = SequenceConfig()
        assert lockin_mu(seq, 500) == pytest.approx(TWO_PI * 400e3, rel=1e-12)


def four_window_reference(cfg, mu, delta):
    """Independent m = 2 sum built from antiderivatives of the four
    cosine windows (different floating route than the oracle)."""
    T, tp = cfg.sequence.t_arm, cfg.sequence.t_pi
    omega, phi = cfg.drive.omega_drive, cfg.odf.odf_phase
    d = omega - mu
    adv = mu * (T + tp)
    pref = (cfg.odf.u_over_hbar * cfg.odf.delta_k * cfg.odf.dwf
            * cfg.drive.z_c)

    def window(t0, sign, off):
        psi = delta - phi + off
        if abs(d) < 1e-9:
            return sign * T * math.cos(psi)
        return sign * (math.sin(d * (t0 + T) + psi) - math.sin(d * t0 + psi)) / d

    total = (window(0.0, 1, 0.0) + window(T + tp, -1, adv)
             + window(2 * T + tp, -1, adv) + window(3 * T + 2 * tp, 1, 2 * adv))
    return pref * total


class TestOracle:
    def test_against_four_window_reference(self):
        cfg = lockin_sequence_cfg(2)
        theta_max = theta_max_from_config(cfg)
        rng = np.random.default_rng(7)
        omega = cfg.drive.omega_drive
        for _ in range(50):
            mu = omega + TWO_PI * rng.uniform(-2e3, 2e3)
            delta = rng.uniform(0, TWO_PI)
            a = theta_of_mu_oracle(cfg, mu, delta)
            b = four_window_reference(cfg, mu, delta)
            assert abs(a - b) < 1e-9 * theta_max

    def test_zero_amplitude(self):
        cfg = lockin_sequence_cfg(2, z_c=0.0)
        assert theta_of_mu_oracle(cfg, cfg.drive.omega_drive, 0.3) == 0.0

    def test_resonant_lockin_value(self):
        # on resonance at a lock-in frequency the precession is
        # theta_max * cos(delta)
        cfg = lockin_sequence_cfg(8)
        theta_max = theta_max_from_config(cfg)
        omega = cfg.drive.omega_drive
        for delta in (0.0, 0.5, 2.0):
            got = theta_of_mu_oracle(cfg, omega, delta)
            assert got == pytest.approx(theta_max * math.cos(delta), rel=1e-9)

    def test_unmodulated_echo_cancels(self):
        # without the phase advance, the pi pulses refocus a
        # phase-continuous ODF and no precession survives on resonance
        cfg = lockin_sequence_cfg(2, modulation=NO_MODULATION)
        theta_max = theta_max_from_config(cfg)
        got = theta_of_mu_oracle(cfg, cfg.drive.omega_drive, 0.0)
        assert abs(got) < 1e-9 * theta_max


class TestClosedForm:
    @pytest.mark.parametrize("m", [2, 8])
    def test_matches_oracle_on_grid(self, m):
        cfg = lockin_sequence_cfg(m)
        theta_max = theta_max_from_config(cfg)
        omega = cfg.drive.omega_drive
        mus = omega + np.linspace(-TWO_PI * 2e3, TWO_PI * 2e3, 1001)
        worst = 0.0
        for mu in mus:
            closed = abs(theta_of_mu_closed(cfg, float(mu)))
            amp, _ = oracle_quadrature_amp_phase(cfg, float(mu))
            worst = max(worst, abs(closed - amp) / theta_max)
        assert worst < 1e-9

    @pytest.mark.parametrize("m", [2, 8])
    def test_quadrature_structure(self, m):
        # theta(mu, delta) = -closed(mu) * cos(m*xi + delta - phi)
        cfg = lockin_sequence_cfg(m)
        theta_max = theta_max_from_config(cfg)
        omega = cfg.drive.omega_drive
        rng = np.random.default_rng(3)
        for _ in range(40):
            mu = float(omega + TWO_PI * rng.uniform(-1.5e3, 1.5e3))
            delta = float(rng.uniform(0, TWO_PI))
            xi = xi_line(cfg, mu)
            predicted = (-theta_of_mu_closed(cfg, mu)
                         * math.cos(m * xi + delta - cfg.odf.odf_phase))
            got = theta_of_mu_oracle(cfg, mu, delta)
            assert abs(got - predicted) < 1e-9 * theta_max

    @pytest.mark.parametrize("m", [2, 8])
    def test_lockin_peak_magnitude(self, m):
        cfg = lockin_sequence_cfg(m)
        theta_max = theta_max_from_config(cfg)
        got = abs(theta_of_mu_closed(cfg, cfg.drive.omega_drive))
        assert got == pytest.approx(theta_max, rel=1e-9)

    def test_zero_amplitude(self):
        cfg = lockin_sequence_cfg(8, z_c=0.0)
        for mu in (cfg.drive.omega_drive, cfg.drive.omega_drive + 1e3):
            assert theta_of_mu_closed(cfg, mu) == 0.0

    def test_unsupported_m(self):
        cfg = lockin_sequence_cfg(4)
        with pytest.raises(UnsupportedSequence):
            theta_of_mu_closed(cfg, cfg.drive.omega_drive)

    def test_unsupported_modulation(self):
        cfg = lockin_sequence_cfg(8, modulation=NO_MODULATION)
        with pytest.raises(UnsupportedSequence):
            theta_of_mu_closed(cfg, cfg.drive.omega_drive)

    def test_linearity_in_zc_and_u(self):
        base = lockin_sequence_cfg(8, z_c=1e-9)
        mu = base.drive.omega_drive + TWO_PI * 321.0
        v = theta_of_mu_closed(base, mu)
        v_zc = theta_of_mu_closed(lockin_sequence_cfg(8, z_c=3e-9), mu)
        v_u = theta_of_mu_closed(
            lockin_sequence_cfg(8, z_c=1e-9, u_over_hbar=3 * base.odf.u_over_hbar),
            mu)
        assert v_zc == pytest.approx(3.0 * v, rel=1e-12)
        assert v_u == pytest.approx(3.0 * v, rel=1e-12)

    @pytest.mark.parametrize("m", [2, 8])
    def test_bounded_by_theta_max(self, m):
        cfg = lockin_sequence_cfg(m)
        theta_max = theta_max_from_config(cfg)
        omega = cfg.drive.omega_drive
        for mu in omega + np.linspace(-TWO_PI * 50e3, TWO_PI * 50e3, 4001):
            assert abs(theta_of_mu_closed(cfg, float(mu))) <= theta_max * (1 + 1e-12)


class TestLineshapeScan:
    def test_fig2_peak(self, fig2_cfg):
        # 7.9 yN, 5 nm, 20 ms: resonant precession about 7.49 rad
        points = lineshape_scan(fig2_cfg, n_points=801)
        peak = max(abs(p.theta_max_mu) for p in points)
        assert peak == pytest.approx(7.49, rel=1e-3)
        center = points[400]
        assert center.mu == pytest.approx(fig2_cfg.drive.omega_drive, rel=1e-12)
        assert 0.0 <= min(p.p_up for p in points)
        assert max(p.p_up for p in points) <= 1.0

    def test_grid_shape(self, fig2_cfg):
        points = lineshape_scan(fig2_cfg, n_points=101)
        assert len(points) == 101
        mus = [p.mu for p in points]
        assert all(b > a for a, b in zip(mus, mus[1:]))

    def test_population_curve_against_independent_route(self, fig2_cfg):
        # whole-chain cross-check: closed form + J0 versus oracle
        # amplitude + phase-average quadrature, at off-resonance points
        from ionlockin import quadrature_average_oracle
        gt = fig2_cfg.gamma_tau
        points = lineshape_scan(fig2_cfg, n_points=41)
        for p in points[::5]:
            amp, _ = oracle_quadrature_amp_phase(fig2_cfg, p.mu)
            independent = quadrature_average_oracle(amp, gt, 512)
            assert p.p_up == pytest.approx(independent, abs=1e-9)


def test_sinc_near_zero():
    assert sinc(0.0) == 1.0
    assert sinc(1e-9) == pytest.approx(1.0, abs=1e-18)
    assert sinc(0.5) == pytest.approx(math.sin(0.5) / 0.5, rel=1e-15)
