"""DFT-s-OFDM transmit/receive chain with spectral extension and FDSS.

All stage functions work on the last axis, so a ``(blocks, n)`` array runs a
whole batch at once. Transforms are unitary (``norm="ortho"``).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateFilterError, ValidationError

NORM_MODES = ("mrc", "literal")

# Gray-mapped QPSK: index-1 = (b_I, b_Q), bit 0 -> +1, bit 1 -> -1.
QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2)


@dataclass(frozen=True)
class SystemConfig:
    n_data: int = 336
    n_se: int = 24
    n_fft: int = 1024
    mod_order: int = 4
    seed: int = 0
    norm_mode: str = "mrc"

    def __post_init__(self):
        if self.n_data < 1 or self.n_se < 0:
            raise ConfigError("n_data must be >= 1 and n_se >= 0")
        if self.n_se > self.n_data:
            raise ConfigError(f"n_se={self.n_se} exceeds n_data={self.n_data}")
        if self.n_sc > self.n_fft:
            raise ConfigError(f"n_sc={self.n_sc} exceeds n_fft={self.n_fft}")
        if 4 * self.n_se > self.n_sc:
            raise ConfigError("4*n_se must not exceed n_sc")
        if self.mod_order != 4:
            raise ConfigError("only QPSK (mod_order=4) is supported")
        if self.norm_mode not in NORM_MODES:
            raise ConfigError(f"norm_mode must be one of {NORM_MODES}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")

    @property
    def n_sc(self) -> int:
        return self.n_data + 2 * self.n_se

    @property
    def ebw(self) -> float:
        return 2 * self.n_se / self.n_data

    @property
    def er(self) -> float:
        return 2 * self.n_se / self.n_sc

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float
    snr_db: float

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise ValidationError("sigma2 must be non-negative")


def _taps(F) -> np.ndarray:
    return np.asarray(getattr(F, "values", F))


def _check_len(a, n, what):
    if a.shape[-1] != n:
        raise ValidationError(f"{what}: expected length {n}, got {a.shape[-1]}")


def map_symbols(s, cfg: SystemConfig | None = None) -> np.ndarray:
    s = np.asarray(s)
    m = cfg.mod_order if cfg else 4
    if s.size and (s.min() < 1 or s.max() > m):
        raise ValidationError(f"symbol indices must lie in 1..{m}")
    return QPSK[s - 1]


def demod(y) -> np.ndarray:
    """Minimum-distance QPSK decisions; ties resolve to the lowest index."""
    y = np.asarray(y)
    return 1 + 2 * (y.real < 0) + (y.imag < 0)


def dft_spread(x) -> np.ndarray:
    return np.fft.fft(x, axis=-1, norm="ortho")


def idft_despread(Y) -> np.ndarray:
    return np.fft.ifft(Y, axis=-1, norm="ortho")


def spectral_extend(X, n_se: int) -> np.ndarray:
    X = np.asarray(X)
    n = X.shape[-1]
    if n_se > n:
        raise ConfigError(f"n_se={n_se} exceeds n_data={n}")
    if n_se == 0:
        return X.copy()
    return np.concatenate([X[..., n - n_se:], X, X[..., :n_se]], axis=-1)


def apply_fdss(X_ext, F) -> np.ndarray:
    f = _taps(F)
    _check_len(np.asarray(X_ext), f.shape[-1], "apply_fdss")
    return X_ext * f


def subcarrier_bins(cfg: SystemConfig, first_bin: int | None = None) -> np.ndarray:
    """FFT bins of the occupied subcarriers, centred on DC by default."""
    if first_bin is None:
        first_bin = -(cfg.n_sc // 2)
    return (first_bin + np.arange(cfg.n_sc)) % cfg.n_fft


def ofdm_modulate(X_tilde, cfg: SystemConfig, first_bin: int | None = None) -> np.ndarray:
    X_tilde = np.asarray(X_tilde)
    _check_len(X_tilde, cfg.n_sc, "ofdm_modulate")
    grid = np.zeros(X_tilde.shape[:-1] + (cfg.n_fft,), dtype=np.complex128)
    grid[..., subcarrier_bins(cfg, first_bin)] = X_tilde
    return np.fft.ifft(grid, axis=-1, norm="ortho")


def calibrate_noise(snr_db: float, cfg: SystemConfig) -> NoiseModel:
    """Noise variance giving per-symbol SNR ``snr_db`` on the ISI-free reference chain.

    With a flat unit-energy filter every tap is 1/sqrt(n_data), so the
    equalised noise per data symbol is ``sigma2 * n_data``.
    """
    snr = 10.0 ** (snr_db / 10.0)
    sigma2 = 0.0 if math.isinf(snr) else 1.0 / (cfg.n_data * snr)
    return NoiseModel(sigma2=sigma2, snr_db=float(snr_db))


def add_awgn(x, noise: NoiseModel, stream) -> np.ndarray:
    """Add CN(0, sigma2) noise drawn from a ``BlockStream`` (one row per block)."""
    x = np.asarray(x)
    if noise.sigma2 == 0:
        return x.copy()
    z = stream.unit_noise(x.shape[-1])
    return x + math.sqrt(noise.sigma2) * z.reshape(x.shape)


def receiver_front(y, cfg: SystemConfig, first_bin: int | None = None) -> np.ndarray:
    y = np.asarray(y)
    _check_len(y, cfg.n_fft, "receiver_front")
    Y = np.fft.fft(y, axis=-1, norm="ortho")
    return Y[..., subcarrier_bins(cfg, first_bin)]


def matched_filter(Y, F) -> np.ndarray:
    f = _taps(F)
    _check_len(np.asarray(Y), f.shape[-1], "matched_filter")
    return Y * np.conj(f)


def se_combine(R, n_se: int) -> np.ndarray:
    """Fold the extension replicas back onto their data bins."""
    R = np.asarray(R)
    n_sc = R.shape[-1]
    n_data = n_sc - 2 * n_se
    T = R[..., n_se:n_se + n_data].copy()
    if n_se:
        T[..., :n_se] += R[..., n_sc - n_se:]
        T[..., n_data - n_se:] += R[..., :n_se]
    return T


def combined_gain(F, cfg: SystemConfig, norm_mode: str | None = None) -> np.ndarray:
    mode = norm_mode or cfg.norm_mode
    f = _taps(F)
    _check_len(f, cfg.n_sc, "combined_gain")
    if mode == "mrc":
        g = se_combine(np.abs(f) ** 2, cfg.n_se)
    elif mode == "literal":
        g = np.abs(se_combine(f, cfg.n_se)) ** 2
    else:
        raise ConfigError(f"unknown norm_mode {mode!r}")
    if np.any(g == 0):
        j = int(np.flatnonzero(g == 0)[0])
        raise DegenerateFilterError(f"combined gain is zero at data bin {j}")
    return g


def normalize(T, gains) -> np.ndarray:
    return T / gains


@dataclass
class ChainOutput:
    tx: np.ndarray
    y: np.ndarray
    s_hat: np.ndarray
    trace: dict = field(default_factory=dict)


def run_chain(cfg: SystemConfig, F, s, noise: NoiseModel | None = None, stream=None,
              trace: bool = False, first_bin: int | None = None) -> ChainOutput:
    """Push symbol indices through the full chain.

    ``s`` is ``(n_data,)`` or ``(blocks, n_data)``. Noise needs a
    ``BlockStream`` with one block per row. ``trace=True`` keeps every
    intermediate vector under its stage name.
    """
    x = map_symbols(s, cfg)
    X = dft_spread(x)
    X_ext = spectral_extend(X, cfg.n_se)
    X_tilde = apply_fdss(X_ext, F)
    tx = ofdm_modulate(X_tilde, cfg, first_bin)
    if noise is not None and noise.sigma2 > 0:
        if stream is None:
            raise ValidationError("a noise stream is required when sigma2 > 0")
        rx = add_awgn(tx, noise, stream)
    else:
        rx = tx
    Y_tilde = receiver_front(rx, cfg, first_bin)
    R = matched_filter(Y_tilde, F)
    T = se_combine(R, cfg.n_se)
    Y_hat = normalize(T, combined_gain(F, cfg))
    y = idft_despread(Y_hat)
    out = ChainOutput(tx=tx, y=y, s_hat=demod(y))
    if trace:
        out.trace = {"x": x, "X": X, "X_ext": X_ext, "X_tilde": X_tilde, "x_tilde": tx,
                     "y_tilde": rx, "Y_tilde": Y_tilde, "R": R, "T": T, "Y_hat": Y_hat}
    return out


def transmit(cfg: SystemConfig, F, s) -> np.ndarray:
    """Transmit half of the chain only (PAPR campaigns)."""
    X_ext = spectral_extend(dft_spread(map_symbols(s, cfg)), cfg.n_se)
    return ofdm_modulate(apply_fdss(X_ext, F), cfg)
