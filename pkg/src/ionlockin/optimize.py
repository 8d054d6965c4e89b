"""Operating-point optimization and long-averaging sensitivity summaries.

All three objectives are unimodal in the product u_tau = (U/hbar)*tau on
the physical branch: past the contrast turnover the exact incoherent SNR
develops spurious side lobes (Bessel oscillations at large precession),
so the bracket is grown geometrically from a small starting point and the
search stays inside the first maximum it encloses. Golden-section was
chosen over derivative methods: the objectives mix Bessel functions and
exponentials, robustness matters more than iteration count here.

The closed-form optima to reproduce: xi*u_tau ~ 1.9603 for the
small-amplitude incoherent objective and xi*u_tau = 1 for the coherent
one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, List, Tuple

from .noise import (COHERENT, INCOHERENT, snr_coherent, snr_incoherent_at,
                    snr_incoherent_smallzc)

if TYPE_CHECKING:  # pragma: no cover
    from .physical import ExperimentConfig

INCOHERENT_EXACT = "incoherent-exact"
INCOHERENT_SMALLZC = "incoherent-smallzc"
COHERENT_OBJECTIVE = "coherent"

OBJECTIVES = (INCOHERENT_EXACT, INCOHERENT_SMALLZC, COHERENT_OBJECTIVE)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# Bracket expansion limits in units of 1/xi.
_EXPAND_START = 0.1
_EXPAND_CAP = 1e3
_EXPAND_FLOOR = 1e-9

DEFAULT_MEASUREMENT_RATE = 16.0  # paired measurements per second


class NoBracket(RuntimeError):
    """Objective still rising at the expansion cap; the configuration is
    outside the regime where an interior optimum exists."""


@dataclass(frozen=True)
class OptimizationResult:
    argmax_u_tau: float
    snr_at_optimum: float
    scan_trace: Tuple[Tuple[float, float], ...]
    converged: bool
    iterations: int


def _objective(cfg: "ExperimentConfig", name: str) -> Callable[[float], float]:
    odf, trap, zc = cfg.odf, cfg.trap, cfg.drive.z_c
    if name == INCOHERENT_EXACT:
        return lambda u: snr_incoherent_at(u, zc, trap.n_ions, odf.dwf,
                                           odf.delta_k, odf.xi_decay).snr
    if name == INCOHERENT_SMALLZC:
        return lambda u: snr_incoherent_smallzc(zc, u, trap.n_ions, odf.dwf,
                                                odf.delta_k, odf.xi_decay)
    if name == COHERENT_OBJECTIVE:
        return lambda u: snr_coherent(zc, u, trap.n_ions, odf.dwf,
                                      odf.delta_k, odf.xi_decay)
    raise ValueError(f"unknown objective {name!r}")


def _bracket(f, xi: float, trace: List[Tuple[float, float]],
             u_start: float):
    """Find (a, b, c) with f(b) >= f(a), f(c) by doubling from ``u_start``,
    halving downward first if the objective is already falling there."""
    u = u_start
    fu = f(u)
    trace.append((u, fu))
    up = 2.0 * u
    fup = f(up)
    trace.append((up, fup))
    if fup >= fu:
        # rising: double until it drops
        a, fa, b, fb = u, fu, up, fup
        while True:
            c = 2.0 * b
            if c > _EXPAND_CAP / xi:
                raise NoBracket(
                    "objective still rising at u_tau = %.3g (= %.3g/xi); "
                    "check the configuration" % (b, b * xi))
            fc = f(c)
            trace.append((c, fc))
            if fc < fb:
                return a, b, c, fb
            a, fa, b, fb = b, fb, c, fc
    # falling at the start: halve downward until a rise appears
    b, fb, c, fc = u, fu, up, fup
    while True:
        a = 0.5 * b
        if a < _EXPAND_FLOOR / xi:
            raise NoBracket("no interior maximum above u_tau = %.3g" % a)
        fa = f(a)
        trace.append((a, fa))
        if fa < fb:
            return a, b, c, fb
        b, fb, c, fc = a, fa, b, fb


def optimize_u_tau(cfg: "ExperimentConfig", objective: str,
                   tol: float = 1e-8) -> OptimizationResult:
    """Golden-section maximization of the selected SNR objective over the
    product u_tau. ``tol`` is relative on the argmax; the scan trace holds
    every evaluation for unimodality audits."""
    if not 1e-10 <= tol <= 1e-2:
        raise ValueError("tol must be in [1e-10, 1e-2]")
    xi = cfg.odf.xi_decay
    if xi <= 0.0:
        raise ValueError("optimization requires xi_decay > 0")
    f = _objective(cfg, objective)
    u_start = _EXPAND_START / xi
    if objective == INCOHERENT_EXACT:
        # The exact SNR grows spurious side maxima once the precession
        # passes the contrast turnover (Bessel lobes at large theta). The
        # physical operating branch is the first maximum, so for large
        # amplitudes start the expansion where theta is still small
        # instead of at a fixed fraction of 1/xi.
        theta_per_u = cfg.odf.dwf * cfg.odf.delta_k * cfg.drive.z_c
        if theta_per_u > 0.0:
            u_start = min(u_start, 0.1 / theta_per_u)
    trace: List[Tuple[float, float]] = []
    a, b, c, fb = _bracket(f, xi, trace, u_start)

    x1 = c - _GOLDEN * (c - a)
    x2 = a + _GOLDEN * (c - a)
    f1, f2 = f(x1), f(x2)
    trace.append((x1, f1))
    trace.append((x2, f2))
    iterations = 0
    max_iter = 200
    while (c - a) > tol * max(abs(b), 1e-300) and iterations < max_iter:
        if f1 >= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - _GOLDEN * (c - a)
            f1 = f(x1)
            trace.append((x1, f1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (c - a)
            f2 = f(x2)
            trace.append((x2, f2))
        b = x1 if f1 >= f2 else x2
        iterations += 1
    # deterministic tie-break toward smaller u_tau
    if f1 >= f2:
        best, fbest = x1, f1
    else:
        best, fbest = x2, f2
    return OptimizationResult(
        argmax_u_tau=best,
        snr_at_optimum=fbest,
        scan_trace=tuple(sorted(trace)),
        converged=iterations < max_iter,
        iterations=iterations,
    )


@dataclass(frozen=True)
class SensitivityReport:
    protocol: str
    measurement_rate: float
    optimal_u_tau: float
    xi_u_tau: float
    snr_unity_amplitude: float  # Zc at which the single-pair SNR reaches 1
    sensitivity: float          # m^2/sqrt(Hz) incoherent, m/sqrt(Hz) coherent


def sensitivity_summary(cfg: "ExperimentConfig", protocol: str,
                        measurement_rate: float = DEFAULT_MEASUREMENT_RATE
                        ) -> SensitivityReport:
    """Long-averaging sensitivity at the optimal operating point.

    The incoherent protocol measures Zc^2 with single-pair SNR C*Zc^2, so
    one pair determines Zc^2 to 1/C and averaging at ``rate`` pairs per
    second gives a density (1/C)/sqrt(rate), quoted at the amplitude where
    the single-pair SNR is one. The coherent protocol measures Zc itself;
    same construction one power down.
    """
    if measurement_rate <= 0.0:
        raise ValueError("measurement_rate must be > 0")
    from .physical import DriveConfig

    odf, trap = cfg.odf, cfg.trap
    # The optimal xi*u_tau does not depend on the amplitude; probe with a
    # small reference Zc in case the config drives none.
    zc_probe = cfg.drive.z_c if cfg.drive.z_c > 0.0 else 1e-10
    probe = cfg.replace(drive=DriveConfig(z_c=zc_probe,
                                          omega_drive=cfg.drive.omega_drive))
    if protocol == INCOHERENT:
        opt = optimize_u_tau(probe, INCOHERENT_SMALLZC)
        # snr(Zc) = c1 * Zc^2 with c1 the SNR at Zc = 1 m
        c1 = snr_incoherent_smallzc(1.0, opt.argmax_u_tau, trap.n_ions,
                                    odf.dwf, odf.delta_k, odf.xi_decay)
        zc_unity = 1.0 / math.sqrt(c1)
        sens = (zc_unity * zc_unity) / math.sqrt(measurement_rate)
    elif protocol == COHERENT:
        opt = optimize_u_tau(probe, COHERENT_OBJECTIVE)
        c1 = snr_coherent(1.0, opt.argmax_u_tau, trap.n_ions, odf.dwf,
                          odf.delta_k, odf.xi_decay)
        zc_unity = 1.0 / c1
        sens = zc_unity / math.sqrt(measurement_rate)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    return SensitivityReport(
        protocol=protocol,
        measurement_rate=measurement_rate,
        optimal_u_tau=opt.argmax_u_tau,
        xi_u_tau=opt.argmax_u_tau * odf.xi_decay,
        snr_unity_amplitude=zc_unity,
        sensitivity=sens,
    )
