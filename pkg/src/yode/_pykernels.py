"""Pure numpy versions of the pair scans in ``_ckernels.pyx``.

The loops run over lags instead of pairs, which keeps the work vectorised,
but every quotient is formed exactly as in the compiled kernel, so the two
backends agree bit for bit (ties included).
"""

import numpy as np


def _dist_rows(values, lag, lo, hi):
    """Distances ``|v[p + lag] - v[p]|`` for ``lo <= p <= hi - lag``."""
    a = values[lo : hi - lag + 1]
    b = values[lo + lag : hi + 1]
    m = values.shape[1]
    if m == 1:
        return np.abs(b[:, 0] - a[:, 0])
    d = b[:, 0] - a[:, 0]
    s = d * d
    for k in range(1, m):
        d = b[:, k] - a[:, k]
        s += d * d
    return np.sqrt(s)


def _better(r, p, q, best, bp, bq):
    return r > best or (r == best and (p, q) < (bp, bq))


def holder_scan(values, lagpow, i0, i1):
    best, bp, bq = -1.0, i0, i0 + 1
    for lag in range(1, i1 - i0 + 1):
        r = _dist_rows(values, lag, i0, i1) / lagpow[lag]
        j = int(np.argmax(r))
        rj = float(r[j])
        if _better(rj, i0 + j, i0 + j + lag, best, bp, bq):
            best, bp, bq = rj, i0 + j, i0 + j + lag
    return best, bp, bq


def lift_scan(values, lagpow, a, b):
    best, bs, bt = -1.0, a, a + 1
    m = values.shape[1]
    for s in range(a, b):
        seg = values[s + 1 : b + 1] - values[s]
        if m == 1:
            d = np.abs(seg[:, 0])
        else:
            acc = seg[:, 0] * seg[:, 0]
            for k in range(1, m):
                acc += seg[:, k] * seg[:, k]
            d = np.sqrt(acc)
        run = np.maximum.accumulate(d)
        r = run / lagpow[1 : b - s + 1]
        j = int(np.argmax(r))
        if float(r[j]) > best:
            best, bs, bt = float(r[j]), s, s + 1 + j
    return best, bs, bt
