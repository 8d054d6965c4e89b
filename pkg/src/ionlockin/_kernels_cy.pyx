# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo trial kernel.

Scalar twin of ``_kernels_py``: same counter-based hash, same uniform
conversion, same inverse-CDF binomial with the pmf built by repeated
multiplication. Both backends execute the identical IEEE-754 operation
sequence per trial, so outputs are bit-identical; the test suite asserts
this whenever the extension is importable.
"""

import numpy as np

from libc.math cimport cos

ctypedef unsigned long long u64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 M1 = 0xBF58476D1CE4E5B9ULL
cdef u64 M2 = 0x94D049BB133111EBULL
cdef double U53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 6.283185307179586

DELTA_RANDOM = 0
DELTA_FIXED = 1


cdef inline u64 _mix(u64 z) nogil:
    z = z + GOLDEN
    z ^= z >> 30
    z = z * M1
    z ^= z >> 27
    z = z * M2
    z ^= z >> 31
    return z


cdef inline u64 _trial_base(u64 seed, u64 stream, u64 trial) nogil:
    return _mix(_mix(_mix(seed) ^ stream) ^ trial)


cdef inline double _unit(u64 h) nogil:
    return <double>(h >> 11) * U53


cdef inline long _binom(double u, long n, double p) nogil:
    cdef double q, ratio, pmf, cdf
    cdef long k, i
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    q = 1.0 - p
    ratio = p / q
    pmf = 1.0
    for i in range(n):
        pmf = pmf * q
    cdf = pmf
    k = 0
    while u > cdf and k < n:
        pmf = (pmf * ((n - k) / (k + 1.0))) * ratio
        cdf = cdf + pmf
        k = k + 1
    return k


def simulate_trials(seed, stream, long start, long count,
                    long n_ions, double e_decay, double p_bck,
                    double amp, double phase0,
                    int delta_mode, double delta_fixed, bint analytic):
    """Simulate trials [start, start+count); see the numpy twin for the
    contract. Runs without the GIL, safe to call from worker threads."""
    cdef u64 s64 = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 st64 = <u64>(stream & 0xFFFFFFFFFFFFFFFF)
    delta_arr = np.empty(count, dtype=np.float64)
    theta_arr = np.empty(count, dtype=np.float64)
    sig_arr = np.empty(count, dtype=np.float64)
    bck_arr = np.empty(count, dtype=np.float64)
    cdef double[::1] delta_v = delta_arr
    cdef double[::1] theta_v = theta_arr
    cdef double[::1] sig_v = sig_arr
    cdef double[::1] bck_v = bck_arr
    cdef long i
    cdef u64 base
    cdef double d, th, p_sig
    with nogil:
        for i in range(count):
            base = _trial_base(s64, st64, <u64>(start + i))
            if delta_mode == 0:
                d = TWO_PI * _unit(_mix(base))
            else:
                d = delta_fixed
            th = amp * cos(d + phase0)
            p_sig = 0.5 * (1.0 - e_decay * cos(th))
            delta_v[i] = d
            theta_v[i] = th
            if analytic:
                sig_v[i] = p_sig
                bck_v[i] = p_bck
            else:
                sig_v[i] = <double>_binom(_unit(_mix(base + GOLDEN)), n_ions, p_sig)
                bck_v[i] = <double>_binom(_unit(_mix(base + 2 * GOLDEN)), n_ions, p_bck)
    return delta_arr, theta_arr, sig_arr, bck_arr


def binomial_sample(seed, stream, long count, long n, double p):
    """Plain binomial draws (counter 1 per trial index) for sampler tests."""
    cdef u64 s64 = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 st64 = <u64>(stream & 0xFFFFFFFFFFFFFFFF)
    out = np.empty(count, dtype=np.int64)
    cdef long long[::1] out_v = out
    cdef long i
    cdef u64 base
    with nogil:
        for i in range(count):
            base = _trial_base(s64, st64, <u64>i)
            out_v[i] = _binom(_unit(_mix(base + GOLDEN)), n, p)
    return out
