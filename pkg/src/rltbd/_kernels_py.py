"""Pure numpy implementation of the TBD likelihood kernels.

Same signatures and semantics as the compiled ``_kernels`` module; used when
the extension is not built or when ``RLTBD_PURE_PYTHON`` is set.
"""
import numpy as np


def _factors(centers, pos, scale, gate):
    d = centers - pos
    f = np.exp(-d * d / (2.0 * scale))
    if gate > 0.0:
        f = np.where(f < gate, 0.0, f)
    return f, d


def mismatch(z, rc, bc, R, B, amp, r, b, gate=0.0):
    fr, _ = _factors(rc, r, R, gate)
    fb, _ = _factors(bc, b, B, gate)
    yh = amp * np.outer(fr, fb)
    return float(np.sum(yh * (yh - 2.0 * z)))


def mismatch_many(z, rc, bc, R, B, amp, r, b, gate=0.0):
    r = np.asarray(r, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(r.shape[0])
    # chunked so the (n, n_range, n_bearing) intermediate stays small
    step = 256
    for start in range(0, r.shape[0], step):
        sl = slice(start, start + step)
        fr, _ = _factors(rc[None, :], r[sl, None], R, gate)
        fb, _ = _factors(bc[None, :], b[sl, None], B, gate)
        yh = amp * fr[:, :, None] * fb[:, None, :]
        out[sl] = np.sum(yh * (yh - 2.0 * z[None]), axis=(1, 2))
    return out


def polar_score(z, rc, bc, R, B, amp, r, b, gate=0.0):
    fr, dr = _factors(rc, r, R, gate)
    fb, db = _factors(bc, b, B, gate)
    yh = amp * np.outer(fr, fb)
    res = z - yh
    pr = yh * (dr / R)[:, None]
    pb = yh * (db / B)[None, :]
    return (
        float(np.sum(yh * (yh - 2.0 * z))),
        float(np.sum(res * pr)),
        float(np.sum(res * pb)),
        float(np.sum(pr * pr)),
        float(np.sum(pr * pb)),
        float(np.sum(pb * pb)),
    )
