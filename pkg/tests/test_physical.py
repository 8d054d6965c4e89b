import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionlockin import (ConfigError, ExperimentConfig, PhysicalConstants,
                       ResonantDrive, TrapConfig, config_from_dict, derive_f0,
                       dwf_from_msd, msd_from_dwf,
                       offres_amplitude_from_field,
                       offres_field_from_amplitude, resonant_ringup_amplitude,
                       zero_point_amplitude)
from ionlockin.physical import (OdfConfig, force_per_ion_from_field,
                                thermal_com_msd)

TWO_PI = 2.0 * math.pi
CONST = PhysicalConstants()


class TestDeriveF0:
    def test_standard_operating_point(self):
        # U/hbar = 2pi x 10.4 kHz, delta_k = 2pi/0.9um, DWF = 0.86
        odf = OdfConfig(u_over_hbar=TWO_PI * 10.4e3)
        f0 = derive_f0(odf, CONST)
        assert f0 == pytest.approx(41.3e-24, rel=0.01)

    def test_zero_potential(self):
        odf = OdfConfig(u_over_hbar=0.0)
        assert derive_f0(odf, CONST) == 0.0

    def test_unity_dwf(self):
        # hand-computed hbar * U * delta_k
        odf = OdfConfig(u_over_hbar=TWO_PI * 10.4e3, dwf=1.0)
        expected = 1.054571817e-34 * TWO_PI * 10.4e3 * (TWO_PI / 0.9e-6)
        assert derive_f0(odf, CONST) == pytest.approx(expected, rel=1e-12)
        assert derive_f0(odf, CONST) == pytest.approx(48.0e-24, rel=0.01)

    def test_linear_in_each_factor(self):
        base = OdfConfig(u_over_hbar=TWO_PI * 5e3, dwf=0.5)
        f_base = derive_f0(base, CONST)
        doubled_u = dataclasses.replace(base, u_over_hbar=2 * base.u_over_hbar)
        doubled_k = dataclasses.replace(base, delta_k=2 * base.delta_k)
        doubled_w = dataclasses.replace(base, dwf=1.0)
        assert derive_f0(doubled_u, CONST) == pytest.approx(2 * f_base, rel=1e-14)
        assert derive_f0(doubled_k, CONST) == pytest.approx(2 * f_base, rel=1e-14)
        assert derive_f0(doubled_w, CONST) == pytest.approx(2 * f_base, rel=1e-14)


class TestZeroPointAmplitude:
    def test_85_ions_near_2nm(self):
        z = zero_point_amplitude(TrapConfig(), CONST)
        assert z == pytest.approx(2e-9, rel=0.10)

    def test_inverse_sqrt_n_scaling(self):
        z1 = zero_point_amplitude(TrapConfig(n_ions=1), CONST)
        z100 = zero_point_amplitude(TrapConfig(n_ions=100), CONST)
        assert z1 / z100 == pytest.approx(10.0, rel=1e-14)

    def test_quadrupling_n_halves(self):
        z85 = zero_point_amplitude(TrapConfig(n_ions=85), CONST)
        z340 = zero_point_amplitude(TrapConfig(n_ions=340), CONST)
        assert z340 == pytest.approx(0.5 * z85, rel=1e-14)

    def test_sqrt_n_invariant(self):
        vals = [zero_point_amplitude(TrapConfig(n_ions=n), CONST) * math.sqrt(n)
                for n in (1, 7, 85, 400)]
        for v in vals[1:]:
            assert v == pytest.approx(vals[0], rel=1e-14)


class TestDebyeWaller:
    DELTA_K = TWO_PI / 0.9e-6

    def test_lamb_dicke_limit(self):
        assert dwf_from_msd(self.DELTA_K, 0.0) == 1.0

    def test_inverse_by_construction(self):
        msd = 2.0 * math.log(1.0 / 0.86) / self.DELTA_K ** 2
        assert dwf_from_msd(self.DELTA_K, msd) == pytest.approx(0.86, rel=1e-14)

    def test_thermal_com_estimate(self):
        # 0.5 mK Doppler-limit estimate counting only the COM-frequency
        # motion; the full-crystal value (0.86) sits a little lower.
        msd = thermal_com_msd(0.5e-3, TrapConfig(), CONST)
        assert msd == pytest.approx(4.7e-15, rel=0.02)
        assert dwf_from_msd(self.DELTA_K, msd) == pytest.approx(0.89, abs=0.005)

    @given(st.floats(min_value=1e-17, max_value=1e-12))
    @settings(max_examples=50, deadline=None)
    def test_roundtrip(self, msd):
        # below ~1e-17 m^2 the factor rounds to 1.0 and the inverse loses
        # the displacement entirely, so the property starts there
        dwf = dwf_from_msd(self.DELTA_K, msd)
        assert msd_from_dwf(self.DELTA_K, dwf) == pytest.approx(msd, rel=1e-12)

    @given(st.floats(min_value=0.0, max_value=1e-13),
           st.floats(min_value=1e-16, max_value=1e-13))
    @settings(max_examples=50, deadline=None)
    def test_strictly_decreasing(self, msd, step):
        assert dwf_from_msd(self.DELTA_K, msd + step) < dwf_from_msd(
            self.DELTA_K, msd)


class TestDrivenOscillator:
    def test_field_detection_point(self):
        # 0.46 mV/m at 400 kHz maps to roughly 50 pm
        z = offres_amplitude_from_field(0.46e-3, TWO_PI * 400e3,
                                        TrapConfig(), CONST)
        assert z == pytest.approx(50e-12, rel=0.15)

    def test_force_per_ion(self):
        f = force_per_ion_from_field(0.46e-3, CONST)
        assert f == pytest.approx(73e-24, rel=0.02)

    def test_zero_field(self):
        assert offres_amplitude_from_field(0.0, TWO_PI * 400e3,
                                           TrapConfig(), CONST) == 0.0

    def test_resonant_guard(self):
        trap = TrapConfig()
        with pytest.raises(ResonantDrive):
            offres_amplitude_from_field(1e-3, trap.omega_z * (1 + 1e-9),
                                        trap, CONST)

    @given(st.floats(min_value=1e-6, max_value=1.0),
           st.floats(min_value=0.1, max_value=0.9))
    @settings(max_examples=50, deadline=None)
    def test_field_amplitude_roundtrip(self, e_field, freq_frac):
        trap = TrapConfig()
        omega = freq_frac * trap.omega_z
        z = offres_amplitude_from_field(e_field, omega, trap, CONST)
        back = offres_field_from_amplitude(z, omega, trap, CONST)
        assert back == pytest.approx(e_field, rel=1e-12)

    def test_ringup_20pm(self):
        # 5e-5 yN/ion driven for 100 ms on the 1.57 MHz mode
        z = resonant_ringup_amplitude(5e-29, 0.1, TrapConfig(), CONST)
        assert z == pytest.approx(20e-12, rel=0.20)

    def test_ringup_zero_time_and_linearity(self):
        trap = TrapConfig()
        assert resonant_ringup_amplitude(1e-24, 0.0, trap, CONST) == 0.0
        z1 = resonant_ringup_amplitude(1e-24, 0.05, trap, CONST)
        z2 = resonant_ringup_amplitude(1e-24, 0.10, trap, CONST)
        assert z2 == pytest.approx(2.0 * z1, rel=1e-14)


class TestConfig:
    def test_defaults_validate(self):
        cfg = ExperimentConfig()
        cfg.validate()
        assert cfg.tau == pytest.approx(0.02)

    def test_unknown_section_named(self):
        with pytest.raises(ConfigError) as err:
            config_from_dict({"odfx": {}})
        assert "odfx" in str(err.value)

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError) as err:
            config_from_dict({"trap": {"omega_x": 1.0}})
        assert "trap.omega_x" in str(err.value)

    def test_invalid_value_named(self):
        with pytest.raises(ConfigError) as err:
            config_from_dict({"trap": {"n_ions": 0}})
        assert "n_ions" in str(err.value)

    def test_large_modulation_warns(self):
        with pytest.warns(UserWarning):
            config_from_dict({"drive": {"z_c": 20e-9}})  # delta_k * z_c ~ 0.14

    def test_immutability(self):
        cfg = ExperimentConfig()
        with pytest.raises(dataclasses.FrozenInstanceError):
            cfg.trap.n_ions = 3

    def test_description_key_allowed(self):
        cfg = config_from_dict({"description": "x", "trap": {"n_ions": 10}})
        assert cfg.trap.n_ions == 10
