"""Built-in oracle suite behind the ``selftest`` subcommand.

Runs the cross-route consistency checks at reduced statistics: closed
lineshape against the window-integration oracle, Bessel signal against
quadrature, Monte Carlo variances against the analytic budget,
determinism under threading, backend bit-equivalence, estimator
round-trip and the closed-form optima. Prints one line per check and
returns a process exit code.
"""

from __future__ import annotations

import math

import numpy as np

from ._kernels import HAVE_COMPILED
from .montecarlo import RngSpec, simulate_batch
from .noise import (XI_U_TAU_OPT_COHERENT, XI_U_TAU_OPT_INCOHERENT,
                    delta_phase_variance)
from .optimize import COHERENT_OBJECTIVE, INCOHERENT_SMALLZC, optimize_u_tau
from .physical import DriveConfig, ExperimentConfig, OdfConfig, TrapConfig
from .sequence import SequenceConfig, oracle_quadrature_amp_phase, theta_of_mu_closed
from .signal import (estimate_theta2_incoherent, p_up_bessel,
                     quadrature_average_oracle, theta_max_from_config)


def _checks():
    cfg = ExperimentConfig(
        trap=TrapConfig(n_ions=85),
        odf=OdfConfig(),
        drive=DriveConfig(z_c=0.5e-9),
        sequence=SequenceConfig(),
    )

    def lineshape_equivalence():
        worst = 0.0
        for m in (2, 8):
            c = cfg.replace(sequence=SequenceConfig(m_segments=m))
            theta_max = theta_max_from_config(c)
            omega = c.drive.omega_drive
            for i in range(201):
                mu = omega + (i - 100) / 100.0 * 2.0 * math.pi * 1.5e3
                closed = abs(theta_of_mu_closed(c, mu))
                amp, _ = oracle_quadrature_amp_phase(c, mu)
                worst = max(worst, abs(closed - amp) / theta_max)
        return worst < 1e-9, f"max relative deviation {worst:.2e}"

    def quadrature_identity():
        worst = max(abs(p_up_bessel(t, 0.3)
                        - quadrature_average_oracle(t, 0.3, 512))
                    for t in np.linspace(0.0, 20.0, 81))
        return worst < 1e-10, f"max |difference| {worst:.2e}"

    def background_variance():
        gt = cfg.gamma_tau
        n = cfg.trap.n_ions
        _, _, _, bck = simulate_batch(cfg, RngSpec(seed=11), 20000)
        frac = bck / n
        p = 0.5 * (1.0 - math.exp(-gt))
        expected = p * (1.0 - p) / n
        sample = frac.var(ddof=1)
        se = math.sqrt(2.0 / (frac.size - 1)) * expected
        dev = abs(sample - expected) / se
        return dev < 5.0, f"deviation {dev:.2f} standard errors"

    def quad_phase_variance():
        theta = theta_max_from_config(cfg)
        _, _, p_sig, _ = simulate_batch(cfg, RngSpec(seed=12), 100000,
                                        analytic_n_infinite=True)
        expected = delta_phase_variance(theta, cfg.gamma_tau)
        sample = p_sig.var(ddof=1)
        m4 = np.mean((p_sig - p_sig.mean()) ** 4)
        se = math.sqrt(max(m4 - sample ** 2, 0.0) / p_sig.size)
        dev = abs(sample - expected) / se
        return dev < 5.0, f"deviation {dev:.2f} standard errors"

    def threading_determinism():
        a = simulate_batch(cfg, RngSpec(seed=13), 2000, workers=1)
        b = simulate_batch(cfg, RngSpec(seed=13), 2000, workers=4)
        ok = all(np.array_equal(x, y) for x, y in zip(a, b))
        return ok, "bit-identical across worker counts" if ok else "MISMATCH"

    def backend_equivalence():
        if not HAVE_COMPILED:
            return True, "compiled kernel not built; skipped"
        a = simulate_batch(cfg, RngSpec(seed=14), 5000, backend="cython")
        b = simulate_batch(cfg, RngSpec(seed=14), 5000, backend="numpy")
        ok = all(np.array_equal(x, y) for x, y in zip(a, b))
        return ok, "cython and numpy kernels bit-identical" if ok else "MISMATCH"

    def estimator_roundtrip():
        theta, gt = 0.8, 0.3
        p = p_up_bessel(theta, gt)
        pb = 0.5 * (1.0 - math.exp(-gt))
        est = estimate_theta2_incoherent(p, pb, gt)
        err = abs(est.theta2 - theta * theta) / (theta * theta)
        return err < 1e-10, f"relative error {err:.2e}"

    def optimizer_optima():
        r1 = optimize_u_tau(cfg, INCOHERENT_SMALLZC)
        r2 = optimize_u_tau(cfg, COHERENT_OBJECTIVE)
        e1 = abs(r1.argmax_u_tau * cfg.odf.xi_decay - XI_U_TAU_OPT_INCOHERENT)
        e2 = abs(r2.argmax_u_tau * cfg.odf.xi_decay - XI_U_TAU_OPT_COHERENT)
        ok = e1 / XI_U_TAU_OPT_INCOHERENT < 1e-3 and e2 < 1e-3
        return ok, f"xi*u_tau errors {e1:.2e}, {e2:.2e}"

    return [
        ("lineshape closed form vs window oracle", lineshape_equivalence),
        ("Bessel signal vs phase-average quadrature", quadrature_identity),
        ("background projection variance vs formula", background_variance),
        ("quadrature-phase variance vs formula", quad_phase_variance),
        ("determinism across worker counts", threading_determinism),
        ("kernel backend equivalence", backend_equivalence),
        ("theta^2 estimator round-trip", estimator_roundtrip),
        ("closed-form operating optima", optimizer_optima),
    ]


def run_selftest(verbose: bool = True) -> int:
    checks = _checks()
    failures = 0
    for name, check in checks:
        try:
            ok, detail = check()
        except Exception as exc:  # a crashed check is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        if verbose:
            print(f"selftest: {name}: {'PASS' if ok else 'FAIL'} ({detail})")
        failures += 0 if ok else 1
    if verbose:
        print(f"selftest: {len(checks) - failures}/{len(checks)} checks passed")
    return 0 if failures == 0 else 1
