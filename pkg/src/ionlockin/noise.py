"""Noise budget and signal-to-noise formulas for both sensing protocols.

For the phase-incoherent protocol the variance of a single paired
measurement P - P_bck decomposes into

    background projection noise   P_bck (1 - P_bck) / N
    signal projection noise       <P> (1 - <P>) / N
    quadrature-phase noise        exp(-2 Gamma tau)/8 *
                                  (1 + J0(2 theta) - 2 J0(theta)^2)

and the single-pair SNR for Zc^2 follows from propagating that through
the estimator, theta^2 * dG/dtheta^2 / (exp(Gamma tau) * sigma). In the
small-amplitude limit this reduces to (<P> - <P>_bck) / sigma and, at the
optimal product (U/hbar)*tau, to the closed limiting forms implemented in
:func:`snr_incoherent_smallzc` and :func:`snr_incoherent_limiting`.

Note the signal projection term uses the phase-averaged probability, i.e.
<P>(1-<P>)/N rather than the delta-average of p(1-p)/N. The two differ by
exactly var_delta/N, negligible against var_delta itself for any ion
number of interest (see tests for the quantified comparison).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .signal import dg_dtheta2, g_of_theta, j0, p_up_background, p_up_bessel

if TYPE_CHECKING:  # pragma: no cover
    from .physical import ExperimentConfig

INCOHERENT = "incoherent"
COHERENT = "coherent"

# Spin-squeezing would reduce projection noise by a scalar factor; kept as
# an explicit divisor with default 1 (no squeezing modeled).
DEFAULT_SQUEEZING_FACTOR = 1.0


@dataclass(frozen=True)
class NoiseBudget:
    var_proj_bck: float
    var_proj_sig: float
    var_delta: float
    var_total_diff: float

    @property
    def sigma_diff(self) -> float:
        return math.sqrt(self.var_total_diff)


@dataclass(frozen=True)
class SnrEstimate:
    """Single-pair signal to noise.

    ``snr`` is Zc^2/dZc^2 for the incoherent protocol (Zc/dZc for the
    coherent one). ``pair_snr`` is the expected value of the raw
    mean-over-std statistic (<P> - <P>_bck)/sigma that a repeated-pair
    measurement estimates; it matches ``snr`` only while the small-angle
    linearization of G holds.
    """

    snr: float
    theta_max: float
    u_tau: float
    mode: str
    budget: NoiseBudget
    pair_snr: float


def projection_variance(p: float, n_ions: int,
                        squeezing_factor: float = DEFAULT_SQUEEZING_FACTOR) -> float:
    """Binomial projection variance p(1-p)/N of the measured fraction."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    if n_ions < 1:
        raise ValueError("n_ions must be >= 1")
    return p * (1.0 - p) / (n_ions * squeezing_factor)


def delta_phase_variance(theta_max: float, gamma_tau: float) -> float:
    """Variance of P_up produced by the uniformly random drive phase,
    exp(-2 Gamma tau)/8 * (1 + J0(2 theta) - 2 J0(theta)^2)."""
    if theta_max < 0.0:
        raise ValueError("theta_max must be >= 0")
    b = 1.0 + j0(2.0 * theta_max) - 2.0 * j0(theta_max) ** 2
    # b is a variance up to the prefactor; clip the tiny negative rounding
    # residue at theta ~ 0.
    if b < 0.0:
        b = 0.0
    return math.exp(-2.0 * gamma_tau) / 8.0 * b


def noise_budget(theta_max: float, gamma_tau: float, n_ions: int,
                 squeezing_factor: float = DEFAULT_SQUEEZING_FACTOR) -> NoiseBudget:
    """Variance decomposition of a paired signal/background measurement
    (independent measurements, variances add)."""
    p_bck = p_up_background(gamma_tau)
    p_sig = p_up_bessel(theta_max, gamma_tau)
    v_bck = projection_variance(p_bck, n_ions, squeezing_factor)
    v_sig = projection_variance(p_sig, n_ions, squeezing_factor)
    v_delta = delta_phase_variance(theta_max, gamma_tau)
    return NoiseBudget(v_bck, v_sig, v_delta, v_bck + v_sig + v_delta)


def snr_incoherent_at(u_tau: float, z_c: float, n_ions: int, dwf: float,
                      delta_k: float, xi_decay: float,
                      squeezing_factor: float = DEFAULT_SQUEEZING_FACTOR) -> SnrEstimate:
    """Exact single-pair SNR for Zc^2 at a given product u_tau = (U/hbar)*tau.

    theta^2 dG/dtheta^2 * exp(-Gamma tau) / sigma(P - P_bck), with
    dG/dtheta^2 = J1(theta)/(4 theta) evaluated analytically.
    """
    theta = dwf * delta_k * z_c * u_tau
    gamma_tau = xi_decay * u_tau
    budget = noise_budget(theta, gamma_tau, n_ions, squeezing_factor)
    decay = math.exp(-gamma_tau)
    snr = theta * theta * dg_dtheta2(theta) * decay / budget.sigma_diff
    pair = decay * g_of_theta(theta) / budget.sigma_diff
    return SnrEstimate(snr, theta, u_tau, INCOHERENT, budget, pair)


def snr_incoherent(cfg: "ExperimentConfig",
                   squeezing_factor: float = DEFAULT_SQUEEZING_FACTOR) -> SnrEstimate:
    """Exact single-pair SNR at the configured operating point."""
    odf = cfg.odf
    return snr_incoherent_at(odf.u_over_hbar * cfg.tau, cfg.drive.z_c,
                             cfg.trap.n_ions, odf.dwf, odf.delta_k,
                             odf.xi_decay, squeezing_factor)


# Optimal xi*U*tau of the small-Zc SNR, the root of s = 2(1 - exp(-2s)).
# The exact prefactor of the limiting formula is 0.0966210; the limiting
# form below carries it rounded to two figures.
XI_U_TAU_OPT_INCOHERENT = 1.9603451974364432
XI_U_TAU_OPT_COHERENT = 1.0
LIMITING_PREFACTOR = 0.097


def snr_incoherent_smallzc(z_c: float, u_tau: float, n_ions: int, dwf: float,
                           delta_k: float, xi_decay: float) -> float:
    """Small-amplitude single-pair SNR at arbitrary u_tau:

        sqrt(N)/(4 sqrt(2)) * DWF^2 (delta_k Zc)^2 u_tau^2
            / sqrt(exp(2 xi u_tau) - 1)

    Maximized at xi*u_tau ~ 1.9603; that maximum is the limiting formula
    below up to the rounding of its 0.097 prefactor (0.39% high).
    """
    if u_tau <= 0.0:
        raise ValueError("u_tau must be > 0")
    num = (math.sqrt(n_ions) / (4.0 * math.sqrt(2.0))
           * (dwf * delta_k * z_c) ** 2 * u_tau ** 2)
    # 1/sqrt(e^{2s} - 1) written as e^{-s}/sqrt(1 - e^{-2s}): same value,
    # no overflow at large s (underflows cleanly to zero instead)
    s = xi_decay * u_tau
    return num * math.exp(-s) / math.sqrt(-math.expm1(-2.0 * s))


def snr_incoherent_limiting(z_c: float, n_ions: int, dwf: float,
                            delta_k: float, xi_decay: float) -> float:
    """Limiting small-amplitude SNR, 0.097 sqrt(N) DWF^2 delta_k^2 Zc^2 / xi^2,
    i.e. the small-Zc optimum with the prefactor rounded to two figures."""
    return (LIMITING_PREFACTOR * math.sqrt(n_ions) * dwf * dwf
            * delta_k * delta_k * z_c * z_c / (xi_decay * xi_decay))


def snr_coherent(z_c: float, u_tau: float, n_ions: int, dwf: float,
                 delta_k: float, xi_decay: float) -> float:
    """Single-measurement SNR for Zc with a phase-stable drive:

        DWF * (delta_k Zc) * sqrt(N/2) * u_tau * exp(-xi u_tau)

    Maximized at xi*u_tau = 1.
    """
    if u_tau <= 0.0:
        raise ValueError("u_tau must be > 0")
    return (dwf * delta_k * z_c * math.sqrt(0.5 * n_ions)
            * u_tau * math.exp(-xi_decay * u_tau))
