"""Hot numeric kernels.

Every kernel has a pure-numpy implementation. When numba is importable and
``WETRELAY_DISABLE_NUMBA`` is unset (or "0"), the njit-compiled variant is
used instead. Both paths take the same arguments and agree to rounding.

All kernels work in noise-normalised units (noise standard deviation 1) and
return natural-log quantities.
"""

import os

import numpy as np

_DISABLE = os.environ.get("WETRELAY_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")

try:
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

_CHUNK = 256


def divergence_numpy(xs, means, probs, z, wz):
    """Information density and its slope at each test point.

    For a Gaussian mixture q = sum_j probs[j] N(means[j], 1) returns

        D(x)  = KL(N(x, 1) || q)
        D'(x) = dD/dx with q held fixed

    evaluated with the z-rule ``(z, wz)`` (``wz`` sums to one and already
    contains the standard normal density).
    """
    xs = np.asarray(xs, dtype=np.float64)
    out_d = np.empty(xs.shape[0])
    out_s = np.empty(xs.shape[0])
    logp = np.log(np.where(probs > 0, probs, 1e-300))
    mask = probs > 0
    m = means[mask]
    lp = logp[mask]
    for start in range(0, xs.shape[0], _CHUNK):
        x = xs[start:start + _CHUNK]
        d = x[:, None] - m[None, :]  # (n, K)
        base = lp[None, :] - 0.5 * d * d  # (n, K)
        expo = base[:, None, :] - d[:, None, :] * z[None, :, None]  # (n, nz, K)
        top = expo.max(axis=2)
        lr = top + np.log(np.exp(expo - top[:, :, None]).sum(axis=2))  # (n, nz)
        out_d[start:start + _CHUNK] = -(lr * wz[None, :]).sum(axis=1)
        out_s[start:start + _CHUNK] = -(lr * (wz * z)[None, :]).sum(axis=1)
    return out_d, out_s


def _divergence_loop(xs, means, probs, z, wz):
    n = xs.shape[0]
    k_all = means.shape[0]
    nz = z.shape[0]
    out_d = np.empty(n)
    out_s = np.empty(n)
    # drop empty components once
    cnt = 0
    for j in range(k_all):
        if probs[j] > 0.0:
            cnt += 1
    m = np.empty(cnt)
    lp = np.empty(cnt)
    c = 0
    for j in range(k_all):
        if probs[j] > 0.0:
            m[c] = means[j]
            lp[c] = np.log(probs[j])
            c += 1
    d = np.empty(cnt)
    base = np.empty(cnt)
    for i in range(n):
        for j in range(cnt):
            d[j] = xs[i] - m[j]
            base[j] = lp[j] - 0.5 * d[j] * d[j]
        acc_d = 0.0
        acc_s = 0.0
        for t in range(nz):
            zt = z[t]
            top = -np.inf
            for j in range(cnt):
                e = base[j] - d[j] * zt
                if e > top:
                    top = e
            s = 0.0
            for j in range(cnt):
                s += np.exp(base[j] - d[j] * zt - top)
            lr = top + np.log(s)
            acc_d -= wz[t] * lr
            acc_s -= wz[t] * zt * lr
        out_d[i] = acc_d
        out_s[i] = acc_s
    return out_d, out_s


if HAVE_NUMBA:
    divergence_numba = njit(cache=True, fastmath=False)(_divergence_loop)
else:  # pragma: no cover - exercised only without numba
    divergence_numba = None


def divergence(xs, means, probs, z, wz):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    means = np.ascontiguousarray(means, dtype=np.float64)
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    if HAVE_NUMBA:
        return divergence_numba(xs, means, probs, z, wz)
    return divergence_numpy(xs, means, probs, z, wz)


divergence.__doc__ = divergence_numpy.__doc__
