"""CPMG sequence timeline and the spin-precession lineshape.

The sequence is m repetitions of [ODF(T), pi pulse, ODF(T)], so 2m ODF
windows and a total interaction time tau = 2 m T (pi-pulse time excluded).
The spin toggles sign at each pi pulse, giving the window sign pattern
+,-,-,+,+,-,-,+,... and, when phase modulation is on, the ODF beatnote
phase advances by mu*(T + t_pi) at every pi pulse.

Two independent routes to the lineshape theta_max(mu) are provided:

* :func:`theta_of_mu_closed`, the closed form available for m = 2 and
  m = 8, built from a sinc envelope and the phase variable
  xi_line = (omega*(T+t_pi) + T*(omega-mu)) / 2;
* :func:`theta_of_mu_oracle`, which integrates the precession window by
  window from the explicit timeline and works for any m. This is the
  brute-force reference the closed forms are tested against.

For the quadrature structure, the oracle satisfies

    theta(mu, delta) = -theta_closed(mu) * cos(m*xi_line + delta - phi)

with phi the ODF beatnote phase; the overall sign is fixed by the
resonant lock-in limit theta = theta_max * cos(delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Tuple

if TYPE_CHECKING:  # pragma: no cover
    from .physical import ExperimentConfig

TWO_PI = 2.0 * math.pi

PHASE_ADVANCE = "phase-advance"
NO_MODULATION = "none"


class UnsupportedSequence(ValueError):
    """No closed-form lineshape for this sequence; use the oracle."""


@dataclass(frozen=True)
class SequenceConfig:
    """CPMG parameters: m ODF-pi-ODF segments of arm time T each."""

    m_segments: int = 8
    t_arm: float = 1.25e-3    # s, single ODF window duration T
    t_pi: float = 1.25e-6     # s, microwave pi-pulse duration
    modulation: str = PHASE_ADVANCE

    def validate(self) -> None:
        from .physical import ConfigError  # local import, no cycle at load

        if self.m_segments < 1:
            raise ConfigError("sequence.m_segments", "must be >= 1")
        if self.t_arm <= 0.0:
            raise ConfigError("sequence.t_arm", "must be > 0")
        if self.t_pi < 0.0:
            raise ConfigError("sequence.t_pi", "must be >= 0")
        if self.modulation not in (PHASE_ADVANCE, NO_MODULATION):
            raise ConfigError("sequence.modulation",
                              f"must be '{PHASE_ADVANCE}' or '{NO_MODULATION}'")

    @property
    def tau(self) -> float:
        return 2.0 * self.m_segments * self.t_arm


@dataclass(frozen=True)
class OdfWindow:
    start_time: float
    duration: float
    spin_sign: int
    odf_phase_offset: float


@dataclass(frozen=True)
class SequenceTimeline:
    """Time-ordered, non-overlapping ODF windows of one CPMG sequence."""

    segments: Tuple[OdfWindow, ...]


@dataclass(frozen=True)
class SignalPoint:
    mu: float             # rad/s
    theta_max_mu: float   # rad, signed
    p_up: float


def build_timeline(seq: SequenceConfig, mu: float) -> SequenceTimeline:
    """Lay out the 2m ODF windows with spin signs and accumulated ODF
    phase offsets.

    Segment j contributes windows [j*(2T+t_pi), ...+T] and
    [j*(2T+t_pi)+T+t_pi, ...+T]; the pi pulse sits between them. Signs
    flip at each pi pulse only (two windows across a segment boundary
    share a sign), and with modulation on the phase offset grows by
    mu*(T+t_pi) at each pi pulse, reaching m*mu*(T+t_pi) at the end.
    """
    seq.validate()
    t_arm, t_pi = seq.t_arm, seq.t_pi
    advance = mu * (t_arm + t_pi) if seq.modulation == PHASE_ADVANCE else 0.0
    windows: List[OdfWindow] = []
    sign = 1
    offset = 0.0
    for j in range(seq.m_segments):
        seg_start = j * (2.0 * t_arm + t_pi)
        windows.append(OdfWindow(seg_start, t_arm, sign, offset))
        sign = -sign
        offset += advance
        windows.append(OdfWindow(seg_start + t_arm + t_pi, t_arm, sign, offset))
    return SequenceTimeline(segments=tuple(windows))


def lockin_mu(seq: SequenceConfig, n: int) -> float:
    """n-th lock-in angular frequency, 2*pi*(2n+1)/(2*(T+t_pi)).

    At these frequencies the per-pulse phase advance is an odd multiple of
    pi and precession from a matched drive accumulates coherently.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return TWO_PI * (2 * n + 1) / (2.0 * (seq.t_arm + seq.t_pi))


def sinc(x: float) -> float:
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1."""
    if abs(x) < 1e-8:
        return 1.0 - x * x / 6.0
    return math.sin(x) / x


def _theta_prefactor(cfg: "ExperimentConfig") -> float:
    # (F0/hbar) * Zc = (U/hbar) * delta_k * DWF * Zc; hbar cancels.
    odf = cfg.odf
    return odf.u_over_hbar * odf.delta_k * odf.dwf * cfg.drive.z_c


def xi_line(cfg: "ExperimentConfig", mu: float) -> float:
    """Lineshape phase variable (omega*(T+t_pi) + T*(omega-mu)) / 2.

    Not to be confused with the decoherence ratio ``odf.xi_decay``.
    """
    seq = cfg.sequence
    omega = cfg.drive.omega_drive
    return 0.5 * (omega * (seq.t_arm + seq.t_pi) + seq.t_arm * (omega - mu))


def theta_of_mu_closed(cfg: "ExperimentConfig", mu: float) -> float:
    """Closed-form lineshape amplitude theta_max(mu), signed.

    m = 2:  theta_max * sinc(T(w-mu)/2) * sin(w(T+t_pi)/2) * sin(xi)
    m = 8:  the m = 2 form times cos(2 xi) * cos(4 xi)

    with xi = xi_line(cfg, mu) and theta_max = (F0/hbar) Zc tau. On a
    lock-in resonance (mu = omega, omega*(T+t_pi) an odd multiple of pi)
    the magnitude equals theta_max exactly.
    """
    seq = cfg.sequence
    if seq.modulation != PHASE_ADVANCE:
        raise UnsupportedSequence("closed form requires phase-advance modulation")
    if seq.m_segments not in (2, 8):
        raise UnsupportedSequence(
            f"no closed form for m = {seq.m_segments}; use theta_of_mu_oracle")
    omega = cfg.drive.omega_drive
    theta_max = _theta_prefactor(cfg) * cfg.tau
    xi = xi_line(cfg, mu)
    value = (theta_max
             * sinc(0.5 * seq.t_arm * (omega - mu))
             * math.sin(0.5 * omega * (seq.t_arm + seq.t_pi))
             * math.sin(xi))
    if seq.m_segments == 8:
        value *= math.cos(2.0 * xi) * math.cos(4.0 * xi)
    return value


def theta_of_mu_oracle(cfg: "ExperimentConfig", mu: float, delta: float) -> float:
    """Brute-force precession for drive quadrature phase delta, any m.

    Sums the exact integral of cos((omega-mu) t + delta - phi + offset_i)
    over each ODF window of the timeline with its spin sign:

        theta = (F0/hbar) Zc * sum_i s_i T sinc(dT/2) cos(d(t_i + T/2) + psi_i)

    where d = omega - mu and psi_i = delta - phi + offset_i.
    """
    seq = cfg.sequence
    omega = cfg.drive.omega_drive
    phi = cfg.odf.odf_phase
    d = omega - mu
    timeline = build_timeline(seq, mu)
    total = 0.0
    for w in timeline.segments:
        mid = w.start_time + 0.5 * w.duration
        total += (w.spin_sign * w.duration * sinc(0.5 * d * w.duration)
                  * math.cos(d * mid + delta - phi + w.odf_phase_offset))
    return _theta_prefactor(cfg) * total


def oracle_quadrature_amp_phase(cfg: "ExperimentConfig",
                                mu: float) -> Tuple[float, float]:
    """Decompose the oracle as theta(delta) = A cos(delta + phase0).

    Any window sum is a pure cosine in delta, so two evaluations pin it
    down: A cos(phase0) = theta(0) and A sin(phase0) = theta(-pi/2).
    """
    c = theta_of_mu_oracle(cfg, mu, 0.0)
    s = theta_of_mu_oracle(cfg, mu, -0.5 * math.pi)
    return math.hypot(c, s), math.atan2(s, c)


DEFAULT_SCAN_POINTS = 801
DEFAULT_SCAN_HALF_SPAN = TWO_PI * 1.5e3  # rad/s around the drive frequency


def lineshape_scan(cfg: "ExperimentConfig",
                   n_points: int = DEFAULT_SCAN_POINTS,
                   half_span: float = DEFAULT_SCAN_HALF_SPAN) -> List[SignalPoint]:
    """Sample theta_max(mu) and the averaged population on a grid centered
    on the drive frequency. Uses the closed form for m in {2, 8} with
    modulation on, the oracle amplitude otherwise."""
    from .signal import p_up_bessel  # deferred: signal does not import us

    seq = cfg.sequence
    omega = cfg.drive.omega_drive
    gamma_tau = cfg.gamma_tau
    use_closed = seq.m_segments in (2, 8) and seq.modulation == PHASE_ADVANCE
    points = []
    for i in range(n_points):
        mu = omega - half_span + (2.0 * half_span * i / (n_points - 1)
                                  if n_points > 1 else 0.0)
        if use_closed:
            theta = theta_of_mu_closed(cfg, mu)
        else:
            theta, _ = oracle_quadrature_amp_phase(cfg, mu)
        points.append(SignalPoint(mu, theta, p_up_bessel(abs(theta), gamma_tau)))
    return points
