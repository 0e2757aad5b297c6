"""PAPR, CCDF, AUCCDF, spectral flatness, SER and comparison readouts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from . import kernels
from .chain import SystemConfig
from .errors import InsufficientSamplesError, UndefinedPaprError, ValidationError

SFM_FLOOR_DB = -300.0


def papr(x) -> np.ndarray:
    """Peak-to-average power ratio of each block (last axis is time)."""
    x = np.asarray(x)
    ratio = kernels.papr_rows(x.reshape(-1, x.shape[-1]))
    if np.any(ratio == 0):
        raise UndefinedPaprError("PAPR of an all-zero waveform is undefined")
    return ratio.reshape(x.shape[:-1])


def papr_db(x) -> np.ndarray:
    return 10.0 * np.log10(papr(x))


def default_edges(step: float = 0.05, top: float = 10.0, bottom: float = 0.0) -> np.ndarray:
    n = int(round((top - bottom) / step))
    return bottom + step * np.arange(n + 1)


@dataclass(frozen=True)
class AuccdfConfig:
    edges: np.ndarray = field(default_factory=default_edges)
    sharpness: float = 100.0

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.float64)
        object.__setattr__(self, "edges", e)
        if e.ndim != 1 or len(e) == 0 or np.any(np.diff(e) <= 0):
            raise ValidationError("AUCCDF edges must be strictly increasing")
        if not self.sharpness > 0:
            raise ValidationError("sharpness must be positive")

    @property
    def papr_max(self) -> float:
        return float(self.edges[-1])

    @classmethod
    def grid(cls, bottom=0.0, top=10.0, step=0.05, sharpness=100.0) -> "AuccdfConfig":
        return cls(default_edges(step, top, bottom), sharpness)


def auccdf_smooth(papr_db_batch, acfg: AuccdfConfig | None = None) -> float:
    """Area under the CCDF with the CDF built from logistic steps at each edge."""
    acfg = acfg or AuccdfConfig()
    return kernels.smooth_auccdf(papr_db_batch, acfg.edges, acfg.sharpness)


def auccdf_hard(papr_db_batch, edges=None) -> float:
    edges = default_edges() if edges is None else np.asarray(edges, dtype=np.float64)
    d = np.ravel(papr_db_batch)
    return float(kernels.exceed_counts(d, edges).sum() / len(d))


@dataclass
class CcdfCurve:
    edges: np.ndarray
    probs: np.ndarray
    n_samples: int


class CcdfAccumulator:
    """Mergeable exceedance counts over a fixed edge grid."""

    def __init__(self, edges):
        self.edges = np.asarray(edges, dtype=np.float64)
        self.counts = np.zeros(len(self.edges), dtype=np.int64)
        self.n = 0

    def add(self, papr_db_samples):
        d = np.ravel(papr_db_samples)
        self.counts += kernels.exceed_counts(d, self.edges)
        self.n += len(d)
        return self

    def merge(self, other: "CcdfAccumulator") -> "CcdfAccumulator":
        if not np.array_equal(self.edges, other.edges):
            raise ValidationError("cannot merge CCDF accumulators with different edges")
        out = CcdfAccumulator(self.edges)
        out.counts = self.counts + other.counts
        out.n = self.n + other.n
        return out

    def curve(self) -> CcdfCurve:
        if self.n == 0:
            raise InsufficientSamplesError("no samples accumulated")
        return CcdfCurve(self.edges.copy(), self.counts / self.n, self.n)


def ccdf(papr_db_samples, edges) -> CcdfCurve:
    return CcdfAccumulator(edges).add(papr_db_samples).curve()


def ccdf_level(curve: CcdfCurve, p: float) -> float:
    """PAPR (dB) where the CCDF crosses ``p``, log-linear between edges."""
    if p * curve.n_samples < 1:
        raise InsufficientSamplesError(
            f"CCDF level {p:g} needs at least {math.ceil(1 / p)} samples, have {curve.n_samples}")
    probs, edges = curve.probs, curve.edges
    above = np.flatnonzero(probs >= p)
    if len(above) == 0:
        raise InsufficientSamplesError(f"CCDF is below {p:g} on the whole grid")
    i = above[-1]
    if i == len(probs) - 1:
        raise InsufficientSamplesError(f"CCDF does not fall below {p:g} on the grid")
    p0, p1 = probs[i], probs[i + 1]
    if p1 > 0:
        t = (math.log(p0) - math.log(p)) / (math.log(p0) - math.log(p1))
    else:
        t = (p0 - p) / (p0 - p1)
    return float(edges[i] + t * (edges[i + 1] - edges[i]))


def spectral_flatness(F, cfg: SystemConfig) -> float:
    """Mid-band spectral flatness in dB over taps 2*n_se+1 .. n_sc-2*n_se (1-based)."""
    v = np.asarray(getattr(F, "values", F), dtype=np.float64)
    mid = v[2 * cfg.n_se: cfg.n_sc - 2 * cfg.n_se]
    if len(mid) == 0:
        raise ValidationError("empty mid-band")
    if np.any(mid <= 0):
        return SFM_FLOOR_DB
    if np.all(mid == mid[0]):
        return 0.0
    sfm = math.exp(np.mean(np.log(mid))) / np.mean(mid)
    return min(0.0, max(SFM_FLOOR_DB, 10.0 * math.log10(sfm)))


def hamming(s, s_hat) -> int:
    s, s_hat = np.asarray(s), np.asarray(s_hat)
    if s.shape != s_hat.shape:
        raise ValidationError("symbol vectors differ in shape")
    return int(np.count_nonzero(s != s_hat))


def ser(s, s_hat) -> float:
    s = np.asarray(s)
    return hamming(s, s_hat) / s.size


def dims(cfg: SystemConfig) -> dict:
    return {"ebw": cfg.ebw, "er": cfg.er, "n_data": cfg.n_data, "n_se": cfg.n_se, "n_sc": cfg.n_sc}


def qpsk_ser(snr_db) -> np.ndarray:
    """Closed-form QPSK symbol error rate on AWGN at per-symbol SNR ``snr_db``."""
    snr = 10.0 ** (np.asarray(snr_db, dtype=np.float64) / 10.0)
    q = 0.5 * erfc(np.sqrt(snr / 2.0))
    return 2 * q - q * q


@dataclass
class SweepResult:
    snr_db: np.ndarray
    ser: np.ndarray
    n_blocks: np.ndarray
    n_errors: np.ndarray | None = None

    def __post_init__(self):
        self.snr_db = np.asarray(self.snr_db, dtype=np.float64)
        self.ser = np.asarray(self.ser, dtype=np.float64)
        self.n_blocks = np.asarray(self.n_blocks, dtype=np.int64)
        if np.any((self.ser < 0) | (self.ser > 1)):
            raise ValidationError("SER values must lie in [0, 1]")


def snr_at_ser(sweep: SweepResult, target: float) -> float:
    """SNR (dB) where the SER curve crosses ``target``, log-linear in SER."""
    snr, v = sweep.snr_db, sweep.ser
    order = np.argsort(snr)
    snr, v = snr[order], v[order]
    for i in range(len(snr) - 1):
        a, b = v[i], v[i + 1]
        if a >= target > b or a > target >= b:
            if a == target:
                return float(snr[i])
            if b > 0:
                t = (math.log(a) - math.log(target)) / (math.log(a) - math.log(b))
            else:
                t = (a - target) / (a - b)
            return float(snr[i] + t * (snr[i + 1] - snr[i]))
    raise InsufficientSamplesError(f"SER {target:g} is not bracketed by the sweep")


def papr_gain(baseline: CcdfCurve, candidate: CcdfCurve, p: float = 1e-3) -> float:
    """PAPR reduction (dB) of ``candidate`` relative to ``baseline`` at CCDF ``p``."""
    return ccdf_level(baseline, p) - ccdf_level(candidate, p)


def snr_loss(candidate: SweepResult, baseline: SweepResult, target_ser: float = 1e-2) -> float:
    """Extra SNR (dB) ``candidate`` needs to reach ``target_ser``."""
    return snr_at_ser(candidate, target_ser) - snr_at_ser(baseline, target_ser)


def analytic_snr_loss(F, cfg: SystemConfig) -> float:
    """SNR penalty of MRC normalisation relative to a constant folded gain.

    Equalised noise per symbol scales with mean(1/g); the reference is
    1/mean(g), so the penalty is mean(g) * mean(1/g) >= 1.
    """
    from .chain import combined_gain

    g = combined_gain(F, cfg, "mrc")
    return float(10.0 * math.log10(np.mean(g) * np.mean(1.0 / g)))
