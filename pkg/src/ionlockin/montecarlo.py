"""Trial-by-trial simulation of the paired sensing measurement.

Each trial draws the drive quadrature phase delta (uniform or pinned per
the drive policy), accumulates the precession theta = A cos(delta +
phase0), and reads out two independent per-ion binomial spin counts, one
with the drive on and one with it off. Aggregating pairs reproduces the
statistics the analytic noise budget predicts, and drives the
signal-to-noise sweep behind the sensing-limit figure.

Determinism contract: all randomness is counter-based on (seed,
stream_id, trial_index), the trial arrays are indexed by trial, and every
reduction runs in fixed trial order. Results are therefore bit-identical
for any worker count, chunking, or kernel backend.

An "analytic-probability" mode records the per-trial probabilities
instead of binomial counts (the N -> infinity limit), which isolates the
quadrature-phase variance for validation since no projection noise is
left.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as np

from . import _kernels, _kernels_py
from .noise import SnrEstimate, snr_incoherent_at
from .signal import (EXACT, SMALL_ANGLE, OutOfInvertibleRange,
                     Theta2Estimate, estimate_theta2_incoherent,
                     theta_max_from_config)

if TYPE_CHECKING:  # pragma: no cover
    from .physical import ExperimentConfig

# Estimator-mode switch: small-angle inversion below this operating
# theta_max, exact inversion above.
SMALL_ANGLE_THETA_SWITCH = 0.5

# Stream salt separating bootstrap resampling from trial randomness.
_BOOTSTRAP_SALT = 0x626F6F74


@dataclass(frozen=True)
class RngSpec:
    """Counter-based RNG coordinates; (seed, stream_id, trial) fixes every
    draw on any platform and any thread count."""

    seed: int
    stream_id: int = 0


@dataclass(frozen=True)
class TrialOutcome:
    delta: float
    theta: float
    k_up_signal: int
    k_up_background: int


@dataclass(frozen=True)
class PairStatistics:
    n_pairs: int
    mean_diff: float
    std_diff: float
    snr_empirical: float
    snr_err: float
    zc2_estimate: float
    clamped_fraction: float
    estimator_mode: str


@dataclass(frozen=True)
class SweepRow:
    z_c: float
    u_tau: float
    stats: PairStatistics
    snr_analytic: float        # exact single-pair SNR (red-line value)
    pair_snr_analytic: float   # expected value of the mean/std statistic


def _operating_point(cfg: "ExperimentConfig", mu: Optional[float]):
    """Quadrature amplitude/phase of theta(delta) at the operating
    frequency: resonant theta_max at mu = omega (or mu None), otherwise
    the window-sum oracle decomposition."""
    from .sequence import oracle_quadrature_amp_phase

    if mu is None or mu == cfg.drive.omega_drive:
        return theta_max_from_config(cfg), 0.0
    return oracle_quadrature_amp_phase(cfg, mu)


def simulate_batch(cfg: "ExperimentConfig", rng: RngSpec, n_trials: int,
                   workers: int = 1, analytic_n_infinite: bool = False,
                   backend: Optional[str] = None, mu: Optional[float] = None):
    """Simulate ``n_trials`` paired measurements.

    Returns (delta, theta, sig, bck) arrays; sig/bck are counts, or
    probabilities in analytic mode. Output is invariant to ``workers``
    and ``backend``.
    """
    kern = _kernels.get_backend(backend)
    amp, phase0 = _operating_point(cfg, mu)
    gt = cfg.gamma_tau
    # Single evaluation point for exp: libm and numpy disagree in the last
    # ulp, so neither kernel computes it internally.
    e_decay = math.exp(-gt)
    p_bck = 0.5 * (1.0 - e_decay)
    dmode = (_kernels_py.DELTA_RANDOM if cfg.drive.delta_policy == "random"
             else _kernels_py.DELTA_FIXED)
    args = (cfg.trap.n_ions, e_decay, p_bck, amp, phase0,
            dmode, cfg.drive.delta_fixed, analytic_n_infinite)

    delta = np.empty(n_trials)
    theta = np.empty(n_trials)
    sig = np.empty(n_trials)
    bck = np.empty(n_trials)

    def run_chunk(lo: int, hi: int):
        d, t, s, b = kern.simulate_trials(rng.seed, rng.stream_id, lo, hi - lo,
                                          *args)
        delta[lo:hi] = d
        theta[lo:hi] = t
        sig[lo:hi] = s
        bck[lo:hi] = b

    workers = max(1, min(workers, n_trials or 1))
    if workers == 1 or n_trials < 2 * workers:
        run_chunk(0, n_trials)
    else:
        bounds = np.linspace(0, n_trials, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_chunk, int(a), int(b))
                       for a, b in zip(bounds[:-1], bounds[1:])]
            for f in futures:
                f.result()
    return delta, theta, sig, bck


def simulate_pair(cfg: "ExperimentConfig", rng: RngSpec,
                  trial_index: int) -> TrialOutcome:
    """Single paired measurement at trial ``trial_index``."""
    kern = _kernels.get_backend(None)
    amp, phase0 = _operating_point(cfg, None)
    e_decay = math.exp(-cfg.gamma_tau)
    p_bck = 0.5 * (1.0 - e_decay)
    dmode = (_kernels_py.DELTA_RANDOM if cfg.drive.delta_policy == "random"
             else _kernels_py.DELTA_FIXED)
    d, t, s, b = kern.simulate_trials(rng.seed, rng.stream_id, trial_index, 1,
                                      cfg.trap.n_ions, e_decay, p_bck, amp,
                                      phase0, dmode, cfg.drive.delta_fixed,
                                      False)
    return TrialOutcome(float(d[0]), float(t[0]), int(s[0]), int(b[0]))


def _bootstrap_snr_err(diffs: np.ndarray, rng: RngSpec,
                       n_resamples: int) -> float:
    """Nonparametric bootstrap standard error of mean/std; the SNR is a
    ratio statistic so no closed-form error is assumed. Resampling draws
    come from the same counter construction on a salted stream."""
    n = diffs.size
    if n < 2 or n_resamples < 2:
        return float("nan")
    ratios = np.empty(n_resamples)
    salt = rng.stream_id ^ _BOOTSTRAP_SALT
    base = _kernels_py.trial_base(rng.seed, salt, np.arange(n, dtype=np.uint64))
    for r in range(n_resamples):
        u = _kernels_py.unit_double(_kernels_py.draw_u64(base, r))
        idx = (u * n).astype(np.int64)
        sample = diffs[idx]
        s = sample.std(ddof=1)
        ratios[r] = sample.mean() / s if s > 0.0 else 0.0
    return float(ratios.std(ddof=1))


def run_pairs(cfg: "ExperimentConfig", rng: RngSpec, n_pairs: int,
              workers: int = 1, analytic_n_infinite: bool = False,
              backend: Optional[str] = None,
              n_bootstrap: int = 400) -> PairStatistics:
    """Aggregate ``n_pairs`` paired measurements.

    ``snr_empirical`` is the mean over standard deviation of the per-pair
    signal-minus-background differences. ``zc2_estimate`` inverts the mean
    populations through the contrast-dip estimator, using the small-angle
    form when the operating theta_max is below 0.5 and exact inversion
    otherwise (the choice is recorded in ``estimator_mode``).
    """
    if n_pairs < 2:
        raise ValueError("n_pairs must be >= 2")
    _, _, sig, bck = simulate_batch(cfg, rng, n_pairs, workers=workers,
                                    analytic_n_infinite=analytic_n_infinite,
                                    backend=backend)
    if analytic_n_infinite:
        p_sig, p_bck = sig, bck
    else:
        n = float(cfg.trap.n_ions)
        p_sig, p_bck = sig / n, bck / n
    diffs = p_sig - p_bck
    mean_diff = float(diffs.mean())
    std_diff = float(diffs.std(ddof=1))
    snr_emp = mean_diff / std_diff if std_diff > 0.0 else 0.0
    snr_err = _bootstrap_snr_err(diffs, rng, n_bootstrap)

    amp = theta_max_from_config(cfg)
    mode = SMALL_ANGLE if amp < SMALL_ANGLE_THETA_SWITCH else EXACT
    per_rad = (cfg.odf.u_over_hbar * cfg.odf.delta_k * cfg.odf.dwf * cfg.tau)
    try:
        est: Theta2Estimate = estimate_theta2_incoherent(
            float(p_sig.mean()), float(p_bck.mean()), cfg.gamma_tau, mode=mode)
        zc2 = est.theta2 / (per_rad * per_rad) if per_rad > 0.0 else float("nan")
        est_mode = est.mode
    except OutOfInvertibleRange:
        # operating point past the contrast turnover: the mean level no
        # longer determines the precession, report that honestly
        zc2 = float("nan")
        est_mode = EXACT
    return PairStatistics(
        n_pairs=n_pairs,
        mean_diff=mean_diff,
        std_diff=std_diff,
        snr_empirical=snr_emp,
        snr_err=snr_err,
        zc2_estimate=zc2,
        clamped_fraction=float((diffs < 0.0).mean()),
        estimator_mode=est_mode,
    )


def sweep_fig4(cfg_base: "ExperimentConfig", zc_list: Sequence[float],
               rng: RngSpec, n_pairs: int, workers: int = 1,
               backend: Optional[str] = None,
               n_bootstrap: int = 400) -> List[SweepRow]:
    """Seeded sensing-limit sweep: for each amplitude, set the optical
    potential to the per-amplitude optimum of the exact single-pair SNR
    and run ``n_pairs`` paired trials. Row ``i`` uses stream_id + i, so
    rows are independent and the whole sweep replays bit-exactly.

    ``snr_analytic`` carries the exact-SNR (red-line) value at the
    operating point; ``pair_snr_analytic`` the model expectation of the
    raw mean/std statistic the simulation estimates. The two agree in the
    small-angle regime and part ways once the operating theta_max is of
    order one (see the noise module notes).
    """
    from .optimize import INCOHERENT_EXACT, optimize_u_tau
    from .physical import DriveConfig, OdfConfig

    rows: List[SweepRow] = []
    for i, z_c in enumerate(zc_list):
        drive = DriveConfig(z_c=float(z_c),
                            omega_drive=cfg_base.drive.omega_drive,
                            delta_policy="random")
        cfg = cfg_base.replace(drive=drive)
        opt = optimize_u_tau(cfg, INCOHERENT_EXACT)
        u_over_hbar = opt.argmax_u_tau / cfg.tau
        odf = OdfConfig(u_over_hbar=u_over_hbar, delta_k=cfg.odf.delta_k,
                        dwf=cfg.odf.dwf, xi_decay=cfg.odf.xi_decay,
                        odf_phase=cfg.odf.odf_phase)
        cfg = cfg.replace(odf=odf)
        est: SnrEstimate = snr_incoherent_at(
            opt.argmax_u_tau, z_c, cfg.trap.n_ions, cfg.odf.dwf,
            cfg.odf.delta_k, cfg.odf.xi_decay)
        stats = run_pairs(cfg, RngSpec(rng.seed, rng.stream_id + i), n_pairs,
                          workers=workers, backend=backend,
                          n_bootstrap=n_bootstrap)
        rows.append(SweepRow(z_c=float(z_c), u_tau=opt.argmax_u_tau,
                             stats=stats, snr_analytic=est.snr,
                             pair_snr_analytic=est.pair_snr))
    return rows
