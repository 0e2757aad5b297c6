"""FDSS filter taps: RRC baseline, polynomial model, constrained designs."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from .chain import SystemConfig, combined_gain
from .errors import ConstraintViolation, DegenerateFilterError, ValidationError

DESIGNS = ("non_flat", "flat", "zero_isi")
SQRT_HALF = math.sqrt(0.5)


@dataclass
class FilterTaps:
    values: np.ndarray
    e_fdss: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __len__(self):
        return len(self.values)

    def validate(self, atol: float = 1e-10) -> "FilterTaps":
        v = self.values
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValidationError("taps must be a finite 1-D vector")
        if np.any(v < 0):
            raise ValidationError("taps must be non-negative")
        if abs(np.sum(v * v) - self.e_fdss) > atol * max(1.0, self.e_fdss):
            raise ValidationError(f"tap energy {np.sum(v * v)!r} != e_fdss {self.e_fdss!r}")
        if np.max(np.abs(v - v[::-1])) > atol * max(1.0, np.max(v)):
            raise ValidationError("taps are not even-symmetric")
        return self


def normalize_energy(values, e_fdss: float = 1.0) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    peak = np.max(np.abs(values)) if values.size else 0.0
    if peak == 0:
        raise DegenerateFilterError("all filter taps are zero")
    if not np.isfinite(peak):
        raise DegenerateFilterError("filter taps are not finite")
    unit = values / peak  # rescale first so tiny or huge taps don't under/overflow
    return unit * math.sqrt(e_fdss / np.sum(unit * unit))


def _antisym(s):
    return 0.5 * (s - s[::-1])


def support_values(design: str, cfg: SystemConfig) -> np.ndarray:
    n_sc, n_se = cfg.n_sc, cfg.n_se
    if design == "non_flat":
        return _antisym(np.linspace(-1.0, 1.0, n_sc))
    if design == "flat":
        s = np.zeros(n_sc)
        if n_se:
            left = -1.0 + np.arange(2 * n_se) / (2 * n_se)
            s[:2 * n_se] = left
            s[n_sc - 2 * n_se:] = -left[::-1]
        return s
    if design == "zero_isi":
        return np.linspace(-1.0, 1.0, n_se)
    raise ValidationError(f"unknown design {design!r}")


def active_powers(design: str, degree: int) -> np.ndarray:
    """Polynomial powers a design may use; the rest stay fixed at zero."""
    if design == "zero_isi":
        return np.arange(degree + 1)
    return np.arange(0, degree + 1, 2)


@dataclass
class PolyFilterModel:
    coeffs: np.ndarray
    design: str = "non_flat"
    e_fdss: float = 1.0
    _support: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.design not in DESIGNS:
            raise ValidationError(f"unknown design {self.design!r}")
        if self.design != "zero_isi":
            if self.degree % 2:
                raise ValidationError(f"{self.design} design needs an even degree")
            if np.any(self.coeffs[1::2] != 0):
                raise ValidationError(f"{self.design} design allows even powers only")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def support(self, cfg: SystemConfig) -> np.ndarray:
        key = (cfg.n_data, cfg.n_se)
        if key not in self._support:
            self._support[key] = support_values(self.design, cfg)
        return self._support[key]

    def with_coeffs(self, coeffs) -> "PolyFilterModel":
        return PolyFilterModel(np.array(coeffs, dtype=np.float64), self.design, self.e_fdss,
                               self._support)


def _polyval(coeffs, s):
    # Horner, lowest power first
    out = np.zeros_like(s)
    for a in coeffs[::-1]:
        out = out * s + a
    return out


def rectify(raw, smooth: bool = False) -> np.ndarray:
    """Clamp raw polynomial taps to be non-negative.

    ``smooth`` uses a softplus whose width is 1% of the peak magnitude, so it
    matches the hard clamp away from zero while keeping finite differences
    well-behaved.
    """
    if not smooth:
        return np.maximum(raw, 0.0)
    width = 1e-2 * np.max(np.abs(raw))
    if width == 0:
        return np.zeros_like(raw)
    return width * np.logaddexp(0.0, raw / width)


def passband_constant(e_fdss: float, n_data: int) -> float:
    return math.sqrt(e_fdss / n_data)


def vestigial_complete(upper, c_v: float, tol: float = 1e-12) -> np.ndarray:
    """Lower-sideband taps mirroring ``upper`` so each pair has power ``c_v**2``."""
    upper = np.asarray(upper, dtype=np.float64)
    lo, hi = c_v * SQRT_HALF, c_v
    if np.any(upper < lo * (1 - tol)) or np.any(upper > hi * (1 + tol)):
        raise ConstraintViolation("upper sideband taps must lie in [c_v/sqrt(2), c_v]")
    return np.sqrt(np.maximum(c_v * c_v - upper[::-1] ** 2, 0.0))


def zero_isi_taps(upper, cfg: SystemConfig, e_fdss: float = 1.0) -> FilterTaps:
    """Assemble a vestigial-symmetric filter from its upper-sideband taps."""
    upper = np.asarray(upper, dtype=np.float64)
    if len(upper) != cfg.n_se:
        raise ValidationError(f"expected {cfg.n_se} upper-sideband taps, got {len(upper)}")
    c_v = passband_constant(e_fdss, cfg.n_data)
    left = np.concatenate([vestigial_complete(upper, c_v), upper])
    mid = np.full(cfg.n_sc - 4 * cfg.n_se, c_v)
    return FilterTaps(np.concatenate([left, mid, left[::-1]]), e_fdss)


def eval_poly_filter(model: PolyFilterModel, cfg: SystemConfig, smooth: bool = False) -> FilterTaps:
    s = model.support(cfg)
    raw = _polyval(model.coeffs, s)
    if model.design == "zero_isi":
        c_v = passband_constant(model.e_fdss, cfg.n_data)
        upper = c_v * (SQRT_HALF + (1 - SQRT_HALF) * expit(raw))
        return zero_isi_taps(upper, cfg, model.e_fdss)
    taps = rectify(raw, smooth)
    return FilterTaps(normalize_energy(taps, model.e_fdss), model.e_fdss)


def resample(model: PolyFilterModel, new_cfg: SystemConfig) -> FilterTaps:
    return eval_poly_filter(model, new_cfg)


def raised_cosine(f, alpha: float) -> np.ndarray:
    f = np.abs(np.asarray(f, dtype=np.float64))
    out = np.zeros_like(f)
    lo, hi = (1 - alpha) / 2, (1 + alpha) / 2
    out[f <= lo] = 1.0
    if alpha > 0:
        m = (f > lo) & (f <= hi)
        out[m] = 0.5 * (1 + np.cos(np.pi / alpha * (f[m] - lo)))
    return out


def subcarrier_freqs(cfg: SystemConfig) -> np.ndarray:
    """Subcarrier positions in units of the data bandwidth, centred on 0."""
    k = np.arange(1, cfg.n_sc + 1)
    return (k - (cfg.n_sc + 1) / 2) / cfg.n_data


def rrc_taps(cfg: SystemConfig, e_fdss: float = 1.0) -> FilterTaps:
    """Root-raised-cosine taps with roll-off equal to the excess bandwidth."""
    rc = raised_cosine(subcarrier_freqs(cfg), cfg.ebw)
    return FilterTaps(normalize_energy(np.sqrt(rc), e_fdss), e_fdss)


def rect_taps(cfg: SystemConfig, e_fdss: float = 1.0, span: str = "data") -> FilterTaps:
    """Rectangular filter: ``span="data"`` is vanilla DFT-s-OFDM (extension unused)."""
    v = np.ones(cfg.n_sc)
    if span == "data":
        v[:cfg.n_se] = 0
        v[cfg.n_sc - cfg.n_se:] = 0
    elif span != "all":
        raise ValidationError("span must be 'data' or 'all'")
    return FilterTaps(normalize_energy(v, e_fdss), e_fdss)


def check_zero_isi(F, cfg: SystemConfig) -> float:
    g = combined_gain(F, cfg, "mrc")
    mean = g.mean()
    return float(np.max(np.abs(g - mean)) / mean)


def is_bell(values, lo: int = 0, hi: int | None = None) -> bool:
    """True when ``values[lo:hi]`` strictly rises to its peak and strictly falls after it.

    Only the tie between the two centre taps of an even-length symmetric
    profile is allowed, so a flat-topped filter such as RRC is not a bell.
    """
    v = np.asarray(values, dtype=np.float64)[lo:hi]
    d = np.diff(v)
    peak = int(np.argmax(v))
    if peak < len(d) and d[peak] == 0:
        d = np.delete(d, peak)
    return bool(np.all(d[:peak] > 0) and np.all(d[peak:] < 0))


def bell_report(taps: FilterTaps, cfg: SystemConfig) -> dict:
    """Shape of a learned profile over all taps and over the data-bearing span."""
    v = taps.values
    return {"full_band": is_bell(v), "data_span": is_bell(v, cfg.n_se, cfg.n_sc - cfg.n_se),
            "peak_to_span_edge": float(v[cfg.n_se] / v.max())}


def fit_to_taps(design: str, cfg: SystemConfig, target: FilterTaps, degree: int = 10,
                e_fdss: float = 1.0, clip: float = 0.02) -> PolyFilterModel:
    """Least-squares polynomial whose filter approximates ``target``."""
    powers = active_powers(design, degree)
    coeffs = np.zeros(degree + 1)
    if design == "zero_isi":
        if cfg.n_se == 0:
            return PolyFilterModel(coeffs, design, e_fdss)
        c_v = passband_constant(e_fdss, cfg.n_data)
        t = target.values * math.sqrt(e_fdss / np.sum(target.values ** 2))
        upper = t[cfg.n_se:2 * cfg.n_se] / c_v
        frac = np.clip((upper - SQRT_HALF) / (1 - SQRT_HALF), clip, 1 - clip)
        y = logit(frac)
        s = support_values(design, cfg)
    else:
        s = support_values(design, cfg)
        y = target.values / np.max(target.values)
    V = s[:, None] ** powers[None, :]
    sol, *_ = np.linalg.lstsq(V, y, rcond=None)
    coeffs[powers] = sol
    return PolyFilterModel(coeffs, design, e_fdss)


def fit_to_rrc(design: str, cfg: SystemConfig, degree: int = 10, e_fdss: float = 1.0) -> PolyFilterModel:
    return fit_to_taps(design, cfg, rrc_taps(cfg, e_fdss), degree, e_fdss)


# -- exchange format ---------------------------------------------------------

def to_record(taps: FilterTaps, cfg: SystemConfig, model: PolyFilterModel | None = None,
              design: str | None = None) -> dict:
    return {
        "design": model.design if model is not None else (design or "taps"),
        "degree": model.degree if model is not None else None,
        "coeffs": model.coeffs.tolist() if model is not None else [],
        "n_data": cfg.n_data,
        "n_se": cfg.n_se,
        "e_fdss": taps.e_fdss,
        "taps": taps.values.tolist(),
    }


def from_record(rec: dict, cfg: SystemConfig | None = None):
    """Rebuild ``(taps, model)`` from a record; ``model`` is None for raw taps.

    With ``cfg`` given, polynomial records are evaluated on it (resampling if
    the dimensions differ) and raw-tap records must match its dimensions.
    """
    for key in ("design", "n_data", "n_se", "e_fdss", "taps"):
        if key not in rec:
            raise ValidationError(f"filter record missing {key!r}")
    e_fdss = float(rec["e_fdss"])
    model = None
    if rec["design"] in DESIGNS and rec.get("coeffs"):
        model = PolyFilterModel(np.array(rec["coeffs"], dtype=np.float64), rec["design"], e_fdss)
    if cfg is None:
        cfg = SystemConfig(n_data=int(rec["n_data"]), n_se=int(rec["n_se"]),
                           n_fft=max(1024, int(rec["n_data"]) + 2 * int(rec["n_se"])))
    if model is not None:
        taps = eval_poly_filter(model, cfg)
    else:
        if (int(rec["n_data"]), int(rec["n_se"])) != (cfg.n_data, cfg.n_se):
            raise ValidationError(
                f"filter is for n_data={rec['n_data']}, n_se={rec['n_se']}, "
                f"config has n_data={cfg.n_data}, n_se={cfg.n_se}")
        taps = FilterTaps(np.array(rec["taps"], dtype=np.float64), e_fdss)
    taps.validate(atol=1e-9)
    return taps, model


def save_filter(path, taps: FilterTaps, cfg: SystemConfig, model: PolyFilterModel | None = None,
                design: str | None = None):
    from .report import atomic_write_text

    atomic_write_text(path, json.dumps(to_record(taps, cfg, model, design), indent=2) + "\n")


def load_filter(path, cfg: SystemConfig | None = None):
    with open(path) as fh:
        return from_record(json.load(fh), cfg)
