"""Physical constants, experiment configuration and oscillator conversions.

Everything internal is SI (meters, seconds, radians, newtons, tesla). The
command line accepts human units (kHz, pm, yN, mV/m) and converts at the
boundary, see :mod:`ionlockin.cli`.

Derived quantities collected here:

* ``F0 = hbar * (U/hbar) * delta_k * DWF``, the spin-dependent force from
  the 1D traveling-wave optical potential,
* ``Gamma = xi_decay * (U/hbar)``, the spontaneous-emission decay rate,
* ``z_zpt = sqrt(hbar / (2 m omega_z)) / sqrt(N)``, the zero-point amplitude
  of the N-ion center-of-mass mode,
* the steady-state and resonant-ring-up responses of the driven
  center-of-mass oscillator, used to convert amplitudes to forces and
  electric fields.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, fields

from .sequence import SequenceConfig

TWO_PI = 2.0 * math.pi

# 9Be+ mass as 9 u; the electron-mass correction is below 1e-4 relative,
# smaller than every tolerance used downstream.
ATOMIC_MASS_UNIT = 1.66053906660e-27


class ConfigError(ValueError):
    """Invalid configuration value. ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class ResonantDrive(ValueError):
    """Drive frequency too close to the trap frequency for the steady-state
    response formula (it diverges on resonance)."""


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA-style constants. Overridable only for testing."""

    hbar: float = 1.054571817e-34  # J s
    kb: float = 1.380649e-23       # J/K
    q_e: float = 1.602176634e-19   # C
    m_ion: float = 9.0 * ATOMIC_MASS_UNIT  # kg

    def validate(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) <= 0.0:
                raise ConfigError(f"constants.{f.name}", "must be strictly positive")


@dataclass(frozen=True)
class TrapConfig:
    omega_z: float = TWO_PI * 1.57e6  # rad/s, axial COM frequency
    n_ions: int = 85
    b_field: float = 4.45             # T, informational only

    def validate(self) -> None:
        if self.omega_z <= 0.0:
            raise ConfigError("trap.omega_z", "must be > 0")
        if self.n_ions < 1:
            raise ConfigError("trap.n_ions", "must be >= 1")


@dataclass(frozen=True)
class OdfConfig:
    """Optical-dipole-force beam parameters.

    ``u_over_hbar`` is the zero-to-peak optical potential expressed as an
    angular frequency, ``xi_decay`` the decoherence ratio Gamma/(U/hbar).
    ``xi_decay`` is distinct from the lineshape phase variable used in
    :mod:`ionlockin.sequence`; the two are never interchangeable.
    """

    u_over_hbar: float = TWO_PI * 10.4e3   # rad/s
    delta_k: float = TWO_PI / 0.9e-6       # rad/m
    dwf: float = 0.86                      # Debye-Waller factor
    xi_decay: float = 1.156e-3
    odf_phase: float = 0.0                 # rad, beatnote phase

    @property
    def gamma(self) -> float:
        """Spontaneous-emission decay rate Gamma = xi_decay * (U/hbar)."""
        return self.xi_decay * self.u_over_hbar

    def validate(self) -> None:
        if self.u_over_hbar < 0.0:
            raise ConfigError("odf.u_over_hbar", "must be >= 0")
        if self.delta_k <= 0.0:
            raise ConfigError("odf.delta_k", "must be > 0")
        if not 0.0 < self.dwf <= 1.0:
            raise ConfigError("odf.dwf", "must be in (0, 1]")
        if self.xi_decay < 0.0:
            raise ConfigError("odf.xi_decay", "must be >= 0")


@dataclass(frozen=True)
class DriveConfig:
    """Classically driven COM motion Zc*cos(omega t + delta).

    ``delta_policy`` selects how the drive phase behaves from one trial to
    the next: ``"random"`` draws it uniformly (phase-incoherent protocol),
    ``"fixed"`` pins it to ``delta_fixed`` (phase-coherent protocol).
    """

    z_c: float = 0.0                        # m, zero to peak
    omega_drive: float = TWO_PI * 400e3     # rad/s
    delta_policy: str = "random"
    delta_fixed: float = 0.0                # rad, used when policy is fixed

    def validate(self) -> None:
        if self.z_c < 0.0:
            raise ConfigError("drive.z_c", "must be >= 0")
        if self.omega_drive <= 0.0:
            raise ConfigError("drive.omega_drive", "must be > 0")
        if self.delta_policy not in ("random", "fixed"):
            raise ConfigError("drive.delta_policy", "must be 'random' or 'fixed'")


@dataclass(frozen=True)
class ExperimentConfig:
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    trap: TrapConfig = field(default_factory=TrapConfig)
    odf: OdfConfig = field(default_factory=OdfConfig)
    drive: DriveConfig = field(default_factory=DriveConfig)
    sequence: SequenceConfig = field(default_factory=SequenceConfig)

    @property
    def tau(self) -> float:
        """Total ODF interaction time, 2 * m * T (pi-pulse time excluded)."""
        return 2.0 * self.sequence.m_segments * self.sequence.t_arm

    @property
    def gamma_tau(self) -> float:
        return self.odf.gamma * self.tau

    @property
    def f0(self) -> float:
        return derive_f0(self.odf, self.constants)

    @property
    def z_zpt(self) -> float:
        return zero_point_amplitude(self.trap, self.constants)

    def validate(self) -> None:
        self.constants.validate()
        self.trap.validate()
        self.odf.validate()
        self.drive.validate()
        self.sequence.validate()
        # Linear-response expansion of the traveling-wave potential needs
        # delta_k * Zc << 1.
        if self.odf.delta_k * self.drive.z_c >= 0.1:
            warnings.warn(
                "drive.z_c: delta_k * z_c = %.3g breaks the small-modulation "
                "expansion (should be << 1)" % (self.odf.delta_k * self.drive.z_c),
                stacklevel=2,
            )

    def replace(self, **sections) -> "ExperimentConfig":
        """Return a copy with whole sections replaced (immutable update)."""
        parts = {
            "constants": self.constants,
            "trap": self.trap,
            "odf": self.odf,
            "drive": self.drive,
            "sequence": self.sequence,
        }
        parts.update(sections)
        cfg = ExperimentConfig(**parts)
        cfg.validate()
        return cfg


# ---------------------------------------------------------------------------
# derived quantities

def derive_f0(odf: OdfConfig, constants: PhysicalConstants) -> float:
    """Magnitude of the optical-dipole force, hbar * (U/hbar) * delta_k * DWF.

    Linear in each factor; zero when the optical potential is off.
    """
    return constants.hbar * odf.u_over_hbar * odf.delta_k * odf.dwf


def zero_point_amplitude(trap: TrapConfig, constants: PhysicalConstants) -> float:
    """Zero-point fluctuation amplitude of the N-ion COM mode (m)."""
    single = math.sqrt(constants.hbar / (2.0 * constants.m_ion * trap.omega_z))
    return single / math.sqrt(trap.n_ions)


def dwf_from_msd(delta_k: float, msd: float) -> float:
    """Debye-Waller factor exp(-delta_k^2 <z^2> / 2) from the mean-square
    axial displacement. Equals 1 only in the Lamb-Dicke limit msd = 0."""
    if msd < 0.0:
        raise ConfigError("msd", "must be >= 0")
    return math.exp(-0.5 * delta_k * delta_k * msd)


def msd_from_dwf(delta_k: float, dwf: float) -> float:
    """Analytic inverse of :func:`dwf_from_msd`."""
    if not 0.0 < dwf <= 1.0:
        raise ConfigError("dwf", "must be in (0, 1]")
    return -2.0 * math.log(dwf) / (delta_k * delta_k)


def thermal_com_msd(temperature: float, trap: TrapConfig,
                    constants: PhysicalConstants) -> float:
    """Classical thermal mean-square displacement kB*T/(m*omega_z^2) of a
    single ion oscillating at the COM frequency.

    This deliberately counts only the COM-frequency motion. The measured
    Debye-Waller factor of a planar crystal also includes the remaining
    drumhead modes, so this estimate comes out slightly optimistic
    (about 0.89 vs the configured default 0.86 at 0.5 mK).
    """
    return constants.kb * temperature / (constants.m_ion * trap.omega_z ** 2)


# ---------------------------------------------------------------------------
# driven-oscillator conversions

_RESONANCE_GUARD = 1e-6  # relative; pragmatic singularity cutoff


def offres_amplitude_from_field(e_field: float, omega_drive: float,
                                trap: TrapConfig,
                                constants: PhysicalConstants) -> float:
    """Steady-state amplitude of the COM mode driven off resonance by a
    uniform electric field: Z = q E / (m |omega_z^2 - omega^2|)."""
    if abs(omega_drive - trap.omega_z) < _RESONANCE_GUARD * trap.omega_z:
        raise ResonantDrive(
            "drive frequency within %.0e of the trap frequency; the "
            "steady-state formula diverges" % _RESONANCE_GUARD)
    return (constants.q_e * e_field / constants.m_ion) / abs(
        trap.omega_z ** 2 - omega_drive ** 2)


def offres_field_from_amplitude(z_c: float, omega_drive: float,
                                trap: TrapConfig,
                                constants: PhysicalConstants) -> float:
    """Inverse of :func:`offres_amplitude_from_field` (round-trips to
    machine precision)."""
    if abs(omega_drive - trap.omega_z) < _RESONANCE_GUARD * trap.omega_z:
        raise ResonantDrive(
            "drive frequency within %.0e of the trap frequency; the "
            "steady-state formula diverges" % _RESONANCE_GUARD)
    return z_c * constants.m_ion * abs(
        trap.omega_z ** 2 - omega_drive ** 2) / constants.q_e


def force_per_ion_from_field(e_field: float, constants: PhysicalConstants) -> float:
    """q * E, the force a uniform field exerts on each ion."""
    return constants.q_e * e_field


def resonant_ringup_amplitude(force_per_ion: float, drive_time: float,
                              trap: TrapConfig,
                              constants: PhysicalConstants) -> float:
    """Amplitude after driving the undamped COM mode on resonance for a
    time t: Z(t) = F t / (2 m omega_z). Assumes growth far below any
    damping limit."""
    if drive_time < 0.0:
        raise ConfigError("drive_time", "must be >= 0")
    return force_per_ion * drive_time / (2.0 * constants.m_ion * trap.omega_z)


# ---------------------------------------------------------------------------
# JSON configuration

_SECTIONS = {
    "constants": PhysicalConstants,
    "trap": TrapConfig,
    "odf": OdfConfig,
    "drive": DriveConfig,
    "sequence": SequenceConfig,
}

# Top-level keys tolerated in config files besides the sections.
_META_KEYS = {"description"}


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a validated :class:`ExperimentConfig` from a JSON document.

    Every section and every field is optional (defaults above apply);
    unknown sections or fields are an error naming the offending key.
    """
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    parts = {}
    for key, value in doc.items():
        if key in _META_KEYS:
            continue
        if key not in _SECTIONS:
            raise ConfigError(key, "unknown configuration section")
        cls = _SECTIONS[key]
        if not isinstance(value, dict):
            raise ConfigError(key, "section must be a JSON object")
        known = {f.name for f in fields(cls)}
        for name in value:
            if name not in known:
                raise ConfigError(f"{key}.{name}", "unknown configuration field")
        kwargs = dict(value)
        if "n_ions" in kwargs:
            kwargs["n_ions"] = int(kwargs["n_ions"])
        if "m_segments" in kwargs:
            kwargs["m_segments"] = int(kwargs["m_segments"])
        parts[key] = cls(**kwargs)
    cfg = ExperimentConfig(**parts)
    cfg.validate()
    return cfg


def config_from_json(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def resolved_config_dict(cfg: ExperimentConfig) -> dict:
    """Full configuration snapshot including derived quantities, suitable
    for --dump-config output and run manifests."""
    def section(obj):
        return {f.name: getattr(obj, f.name) for f in fields(obj)}

    return {
        "constants": section(cfg.constants),
        "trap": section(cfg.trap),
        "odf": section(cfg.odf),
        "drive": section(cfg.drive),
        "sequence": section(cfg.sequence),
        "derived": {
            "f0_newton": cfg.f0,
            "gamma_per_s": cfg.odf.gamma,
            "tau_s": cfg.tau,
            "gamma_tau": cfg.gamma_tau,
            "z_zpt_m": cfg.z_zpt,
            "theta_max_rad": cfg.odf.u_over_hbar * cfg.odf.delta_k
            * cfg.odf.dwf * cfg.drive.z_c * cfg.tau,
        },
    }
