"""Numpy fallback for the compiled kernels in ``_core.pyx``."""
import numpy as np
from scipy.special import expit


def papr_rows(x):
    p = x.real * x.real + x.imag * x.imag
    total = p.sum(axis=1)
    peak = p.max(axis=1)
    out = np.zeros(x.shape[0])
    ok = total > 0
    out[ok] = peak[ok] * x.shape[1] / total[ok]
    return out


def smooth_auccdf(papr_db, edges, sharpness):
    if len(papr_db) == 0:
        raise ValueError("empty batch")
    z = sharpness * (papr_db[:, None] - edges[None, :])
    return float(expit(z).sum(axis=1).mean())


def exceed_counts(papr_db, edges):
    srt = np.sort(papr_db)
    return (len(srt) - np.searchsorted(srt, edges, side="right")).astype(np.int64)
