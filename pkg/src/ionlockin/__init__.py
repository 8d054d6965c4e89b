"""Quantum lock-in amplitude sensing for trapped-ion crystals.

Simulation, noise analysis and operating-point optimization for the
spin-dependent-force protocol that reads a driven center-of-mass
amplitude out of an ion crystal's spin population: exact lineshapes with
a brute-force oracle, the Bessel dephasing signal, the projection and
quadrature-phase noise budget, closed-form and Monte Carlo
signal-to-noise limits, and the CSV data behind the theory curves.
"""

__version__ = "0.1.0"

from .physical import (ConfigError, DriveConfig, ExperimentConfig, OdfConfig,
                       PhysicalConstants, ResonantDrive, TrapConfig,
                       config_from_dict, config_from_json, derive_f0,
                       dwf_from_msd, msd_from_dwf, offres_amplitude_from_field,
                       offres_field_from_amplitude, resonant_ringup_amplitude,
                       zero_point_amplitude)
from .sequence import (SequenceConfig, SequenceTimeline, SignalPoint,
                       UnsupportedSequence, build_timeline, lineshape_scan,
                       lockin_mu, theta_of_mu_closed, theta_of_mu_oracle)
from .signal import (J0_FIRST_ZERO, OutOfInvertibleRange,
                     estimate_theta2_incoherent, j0, j1, p_up_background,
                     p_up_bessel, p_up_coherent, quadrature_average_oracle,
                     theta_max_from_config)
from .noise import (NoiseBudget, SnrEstimate, delta_phase_variance,
                    noise_budget, projection_variance, snr_coherent,
                    snr_incoherent, snr_incoherent_limiting,
                    snr_incoherent_smallzc)
from .montecarlo import (PairStatistics, RngSpec, TrialOutcome, run_pairs,
                         simulate_batch, simulate_pair, sweep_fig4)
from .optimize import (NoBracket, OptimizationResult, SensitivityReport,
                       optimize_u_tau, sensitivity_summary)
