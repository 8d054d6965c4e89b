"""Vectorized numpy implementation of the Monte Carlo trial kernel.

This module and the Cython twin ``_kernels_cy`` implement the same
contract and must produce bit-identical output:

* Randomness is counter-based. A 64-bit avalanche mix (the splitmix64
  finalizer) hashes (seed, stream, trial) into a per-trial base state;
  draw ``c`` of a trial is mix(base + c * GOLDEN). Nothing is sequential,
  so any partition of trials over threads or processes replays exactly.
* Uniform doubles are the top 53 bits of the hash times 2^-53.
* Binomial counts come from inverse-CDF search with the pmf built by
  repeated multiplication (never pow), so every backend performs the
  identical IEEE operation sequence. Draw layout per trial:
  counter 0 -> drive phase, 1 -> signal count, 2 -> background count.

The only transcendental evaluated per trial is cos; exp factors are
precomputed by the caller precisely because libm and numpy disagree in
the last ulp for exp but agree for cos (asserted in the test suite).
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -53

DELTA_RANDOM = 0
DELTA_FIXED = 1

TWO_PI = 6.283185307179586


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z + GOLDEN).astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def trial_base(seed: int, stream: int, trials: np.ndarray) -> np.ndarray:
    """Per-trial base states from (seed, stream, trial index)."""
    t = np.asarray(trials, dtype=np.uint64)
    s = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + np.zeros_like(t))
    s = _mix(s ^ np.uint64(stream & 0xFFFFFFFFFFFFFFFF))
    return _mix(s ^ t)


def draw_u64(base: np.ndarray, counter: int) -> np.ndarray:
    # counter * GOLDEN in plain Python ints, masked to 64 bits, so no
    # numpy scalar-overflow warnings fire.
    jump = np.uint64((counter * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)
    return _mix((base + jump).astype(np.uint64))


def unit_double(h: np.ndarray) -> np.ndarray:
    """Uniform in [0, 1) from the top 53 bits."""
    return (h >> np.uint64(11)).astype(np.float64) * _U53


def uniforms(seed: int, stream: int, trials: np.ndarray, counter: int) -> np.ndarray:
    return unit_double(draw_u64(trial_base(seed, stream, trials), counter))


def binomial_from_uniform(u: np.ndarray, n: int, p: np.ndarray) -> np.ndarray:
    """Inverse-CDF binomial draw, elementwise identical to the scalar loop:

        pmf = q*q*...*q (n times); cdf = pmf; k = 0
        while u > cdf and k < n:
            pmf = (pmf * ((n-k)/(k+1))) * (p/q); cdf += pmf; k += 1
    """
    p = np.broadcast_to(np.asarray(p, dtype=np.float64), u.shape)
    k = np.zeros(u.shape, dtype=np.int64)
    done_hi = p >= 1.0
    live = ~done_hi & (p > 0.0)
    k[done_hi] = n

    q = np.where(live, 1.0 - p, 1.0)
    ratio = np.where(live, p, 0.0) / q
    pmf = np.ones(u.shape)
    for _ in range(n):
        pmf = pmf * q
    cdf = pmf.copy()

    for j in range(n):
        active = live & (u > cdf)
        if not active.any():
            break
        step = (pmf * ((n - j) / (j + 1.0))) * ratio
        pmf = np.where(active, step, pmf)
        cdf = np.where(active, cdf + step, cdf)
        k += active
    return k


def simulate_trials(seed: int, stream: int, start: int, count: int,
                    n_ions: int, e_decay: float, p_bck: float,
                    amp: float, phase0: float,
                    delta_mode: int, delta_fixed: float, analytic: bool):
    """Simulate trials [start, start+count).

    Returns (delta, theta, sig, bck) float64 arrays; sig/bck hold counts
    (integral-valued) in binomial mode or probabilities in analytic mode.
    """
    trials = np.arange(start, start + count, dtype=np.uint64)
    base = trial_base(seed, stream, trials)
    if delta_mode == DELTA_RANDOM:
        delta = TWO_PI * unit_double(draw_u64(base, 0))
    else:
        delta = np.full(count, float(delta_fixed))
    theta = amp * np.cos(delta + phase0)
    p_sig = 0.5 * (1.0 - e_decay * np.cos(theta))
    if analytic:
        return delta, theta, p_sig, np.full(count, float(p_bck))
    u_sig = unit_double(draw_u64(base, 1))
    u_bck = unit_double(draw_u64(base, 2))
    sig = binomial_from_uniform(u_sig, n_ions, p_sig).astype(np.float64)
    bck = binomial_from_uniform(u_bck, n_ions, np.full(count, float(p_bck)))
    return delta, theta, sig, bck.astype(np.float64)


def binomial_sample(seed: int, stream: int, count: int, n: int, p: float) -> np.ndarray:
    """Plain binomial draws, one per trial index (counter 1); used by the
    sampler validation tests."""
    trials = np.arange(count, dtype=np.uint64)
    u = unit_double(draw_u64(trial_base(seed, stream, trials), 1))
    return binomial_from_uniform(u, n, np.full(count, float(p)))
