"""Hot classical kernels with an optional numba backend.

The smoothing and common-information searches evaluate these closed forms
hundreds of thousands of times on small float64 vectors, where per-call
overhead dominates.  Backend selection:

    ONESHOT_BACKEND=numba   force numba (raises if numba missing)
    ONESHOT_BACKEND=numpy   force the vectorized-numpy path
    unset / auto            numba when importable, else numpy

Both backends compute identical formulas; `benchmarks/bench_kernels.py`
compares them and the test suite asserts agreement.
"""

from __future__ import annotations

import os

import numpy as np

_CUT = 1e-15


# -- vectorized numpy reference implementations --------------------------------

def _shannon_bits_np(p):
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > _CUT]
    if nz.size == 0:
        return 0.0
    return float(-np.sum(nz * np.log2(nz)))


def _max_ratio_np(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    on = p > _CUT
    if np.any(on & (q <= _CUT)):
        return np.inf
    if not np.any(on):
        return 0.0
    return float(np.max(p[on] / q[on]))


def _i_up_exp_classical_np(joint, marginal):
    joint = np.asarray(joint, dtype=np.float64)
    marginal = np.asarray(marginal, dtype=np.float64)
    on = joint > _CUT
    if np.any(on & (marginal[None, :] <= _CUT)):
        return np.inf
    safe = np.where(marginal > _CUT, marginal, 1.0)
    ratios = np.where(on, joint / safe[None, :], 0.0)
    return float(np.sum(np.max(ratios, axis=1)))


def _trace_distance_classical_np(p, q):
    return 0.5 * float(np.sum(np.abs(np.asarray(p, float) - np.asarray(q, float))))


def _purified_distance_classical_np(p, q):
    p = np.maximum(np.asarray(p, dtype=np.float64), 0.0)
    q = np.maximum(np.asarray(q, dtype=np.float64), 0.0)
    f = float(np.sum(np.sqrt(p * q)))
    dp = max(0.0, 1.0 - float(np.sum(p)))
    dq = max(0.0, 1.0 - float(np.sum(q)))
    # trace-noise deficits below tolerance would be amplified by the sqrt
    if dp < 1e-12:
        dp = 0.0
    if dq < 1e-12:
        dq = 0.0
    fstar = min(f + np.sqrt(dp * dq), 1.0)
    return float(np.sqrt(max(0.0, 1.0 - fstar * fstar)))


def _covering_errors_classical_np(cond, avg, codebooks):
    cond = np.asarray(cond, dtype=np.float64)
    mixes = cond[codebooks].mean(axis=1)
    return np.sum(np.abs(mixes - avg[None, :]), axis=1)


# -- loop implementations, compiled when the numba backend is active -----------

def _shannon_bits_loop(p):
    total = 0.0
    for i in range(p.size):
        v = p[i]
        if v > _CUT:
            total -= v * np.log2(v)
    return total


def _max_ratio_loop(p, q):
    best = 0.0
    for i in range(p.size):
        if p[i] > _CUT:
            if q[i] <= _CUT:
                return np.inf
            r = p[i] / q[i]
            if r > best:
                best = r
    return best


def _i_up_exp_classical_loop(joint, marginal):
    total = 0.0
    for x in range(joint.shape[0]):
        row_best = 0.0
        for c in range(joint.shape[1]):
            v = joint[x, c]
            if v > _CUT:
                if marginal[c] <= _CUT:
                    return np.inf
                r = v / marginal[c]
                if r > row_best:
                    row_best = r
        total += row_best
    return total


def _trace_distance_classical_loop(p, q):
    total = 0.0
    for i in range(p.size):
        total += abs(p[i] - q[i])
    return 0.5 * total


def _purified_distance_classical_loop(p, q):
    f = 0.0
    sp = 0.0
    sq = 0.0
    for i in range(p.size):
        a = p[i] if p[i] > 0.0 else 0.0
        b = q[i] if q[i] > 0.0 else 0.0
        f += np.sqrt(a * b)
        sp += a
        sq += b
    dp = 1.0 - sp if sp < 1.0 - 1e-12 else 0.0
    dq = 1.0 - sq if sq < 1.0 - 1e-12 else 0.0
    fstar = f + np.sqrt(dp * dq)
    if fstar > 1.0:
        fstar = 1.0
    rest = 1.0 - fstar * fstar
    if rest < 0.0:
        rest = 0.0
    return np.sqrt(rest)


def _covering_errors_classical_loop(cond, avg, codebooks):
    n_trials, m = codebooks.shape
    ncell = cond.shape[1]
    out = np.empty(n_trials, dtype=np.float64)
    for t in range(n_trials):
        mix = np.zeros(ncell, dtype=np.float64)
        for j in range(m):
            k = codebooks[t, j]
            for c in range(ncell):
                mix[c] += cond[k, c]
        err = 0.0
        for c in range(ncell):
            err += abs(mix[c] / m - avg[c])
        out[t] = err
    return out


_NUMPY_IMPLS = {
    "shannon_bits": _shannon_bits_np,
    "max_ratio": _max_ratio_np,
    "i_up_exp_classical": _i_up_exp_classical_np,
    "trace_distance_classical": _trace_distance_classical_np,
    "purified_distance_classical": _purified_distance_classical_np,
    "covering_errors_classical": _covering_errors_classical_np,
}

_LOOP_IMPLS = {
    "shannon_bits": _shannon_bits_loop,
    "max_ratio": _max_ratio_loop,
    "i_up_exp_classical": _i_up_exp_classical_loop,
    "trace_distance_classical": _trace_distance_classical_loop,
    "purified_distance_classical": _purified_distance_classical_loop,
    "covering_errors_classical": _covering_errors_classical_loop,
}


def _pick_backend() -> str:
    choice = os.environ.get("ONESHOT_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"ONESHOT_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _pick_backend()

if BACKEND == "numba":
    from numba import njit

    _jitted = {name: njit(cache=True)(fn) for name, fn in _LOOP_IMPLS.items()}

    def _wrap(name):
        jit_fn = _jitted[name]

        def call(*arrays):
            return jit_fn(*(np.ascontiguousarray(a, dtype=np.float64)
                            if np.asarray(a).dtype != np.int64 else np.ascontiguousarray(a)
                            for a in arrays))

        call.__name__ = name
        return call

    shannon_bits = _wrap("shannon_bits")
    max_ratio = _wrap("max_ratio")
    i_up_exp_classical = _wrap("i_up_exp_classical")
    trace_distance_classical = _wrap("trace_distance_classical")
    purified_distance_classical = _wrap("purified_distance_classical")
    covering_errors_classical = _wrap("covering_errors_classical")
else:
    shannon_bits = _shannon_bits_np
    max_ratio = _max_ratio_np
    i_up_exp_classical = _i_up_exp_classical_np
    trace_distance_classical = _trace_distance_classical_np
    purified_distance_classical = _purified_distance_classical_np
    covering_errors_classical = _covering_errors_classical_np


def numpy_impl(name: str):
    """Vectorized reference implementation, for agreement tests and benchmarks."""
    return _NUMPY_IMPLS[name]


def loop_impl(name: str):
    """Uncompiled loop implementation (what numba jits)."""
    return _LOOP_IMPLS[name]
