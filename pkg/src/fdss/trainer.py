"""Stochastic-gradient design of polynomial FDSS filters.

The loss is ``E + lambda1*mean(PAPR_dB) + lambda2*AUCCDF + gamma*S`` where
``E`` is the per-block squared symbol error and ``S`` the flatness penalty.
Gradients are central finite differences over the active polynomial
coefficients, with every perturbed evaluation replaying the same symbols and
noise (common random numbers).
"""
from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import chain
from .chain import SystemConfig
from .errors import GradientError, ValidationError
from .filters import (FilterTaps, PolyFilterModel, active_powers, eval_poly_filter,
                      fit_to_rrc)
from .metrics import AuccdfConfig, auccdf_smooth, papr_db, qpsk_ser, spectral_flatness
from .rng import BlockStream


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 0.0
    lambda2: float = 0.0
    gamma: float = 0.0
    # -1 penalises non-flatness (S = -SFM_dB); +1 is the literal S = SFM_dB
    flatness_sign: float = -1.0

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.gamma) < 0:
            raise ValidationError("loss weights must be non-negative")
        if self.flatness_sign not in (-1.0, 1.0):
            raise ValidationError("flatness_sign must be +1 or -1")


@dataclass(frozen=True)
class TrainConfig:
    batch_blocks: int = 256
    steps: int = 200
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    fd_step: float = 1e-4
    train_snr_db: float | None = None
    seed: int = 1
    validation_blocks: int = 1024
    degree: int = 10
    auccdf: AuccdfConfig = field(default_factory=AuccdfConfig)
    threads: int = 1

    def __post_init__(self):
        if self.batch_blocks < 1:
            raise ValidationError("batch_blocks must be >= 1")
        if not self.fd_step > 0:
            raise ValidationError("fd_step must be positive")
        if self.steps < 0:
            raise ValidationError("steps must be non-negative")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["auccdf"] = {"edges": [float(self.auccdf.edges[0]), float(self.auccdf.edges[-1]),
                                 len(self.auccdf.edges)],
                       "sharpness": self.auccdf.sharpness}
        return d


def reference_snr_db(target_ser: float = 1e-2) -> float:
    """Per-symbol SNR at which ISI-free QPSK reaches ``target_ser``."""
    from scipy.optimize import brentq

    return float(brentq(lambda v: qpsk_ser(v) - target_ser, -10.0, 30.0, xtol=1e-12))


@dataclass
class LossParts:
    total: float
    E: float
    P: float
    S: float

    def as_tuple(self):
        return (self.E, self.P, self.S, self.total)


class Batch:
    """One batch of symbols and noise, replayed for every filter evaluated on it.

    The receiver sees ``FFT(tx + z) = X_tilde + FFT(z)`` on the occupied bins,
    so the noise is taken to the frequency domain once per batch.
    """

    def __init__(self, cfg: SystemConfig, stream: BlockStream, sigma2: float):
        self.cfg = cfg
        self.s = stream.symbols(cfg.n_data, cfg.mod_order)
        self.x = chain.map_symbols(self.s, cfg)
        self.X_ext = chain.spectral_extend(chain.dft_spread(self.x), cfg.n_se)
        self.sigma2 = sigma2
        if sigma2 > 0:
            z = stream.unit_noise(cfg.n_fft)
            self.Z = math.sqrt(sigma2) * chain.receiver_front(z, cfg)
        else:
            self.Z = None

    def outputs(self, F):
        """Return ``(tx waveform, equalised symbols y)`` for taps ``F``."""
        cfg = self.cfg
        X_tilde = chain.apply_fdss(self.X_ext, F)
        tx = chain.ofdm_modulate(X_tilde, cfg)
        Y = X_tilde if self.Z is None else X_tilde + self.Z
        T = chain.se_combine(chain.matched_filter(Y, F), cfg.n_se)
        y = chain.idft_despread(chain.normalize(T, chain.combined_gain(F, cfg)))
        return tx, y


def loss(x, y, tx, F, cfg: SystemConfig, weights: LossWeights,
         acfg: AuccdfConfig | None = None) -> LossParts:
    acfg = acfg or AuccdfConfig()
    E = float(np.mean(np.sum(np.abs(x - y) ** 2, axis=-1)))
    P = 0.0
    if weights.lambda1 or weights.lambda2:
        d = papr_db(tx)
        if weights.lambda1:
            P += weights.lambda1 * float(np.mean(d))
        if weights.lambda2:
            P += weights.lambda2 * auccdf_smooth(d, acfg)
    S = weights.flatness_sign * spectral_flatness(F, cfg) if weights.gamma else 0.0
    return LossParts(E + P + weights.gamma * S, E, P, S)


def batch_loss(model: PolyFilterModel, batch: Batch, weights: LossWeights,
               acfg: AuccdfConfig | None = None, smooth: bool = True) -> LossParts:
    F = eval_poly_filter(model, batch.cfg, smooth=smooth)
    tx, y = batch.outputs(F)
    return loss(batch.x, y, tx, F, batch.cfg, weights, acfg)


def grad_estimate(model: PolyFilterModel, batch: Batch, weights: LossWeights,
                  fd_step: float = 1e-4, acfg: AuccdfConfig | None = None,
                  threads: int = 1) -> np.ndarray:
    """Central-difference gradient over the design's active coefficients.

    Inactive coefficients (odd powers of symmetric designs) get exactly 0.
    """
    a = model.coeffs
    powers = active_powers(model.design, model.degree)
    jobs = []
    for d in powers:
        h = fd_step * max(abs(a[d]), 1.0)
        for sign in (1.0, -1.0):
            c = a.copy()
            c[d] += sign * h
            jobs.append((d, h, c))

    def run(job):
        return batch_loss(model.with_coeffs(job[2]), batch, weights, acfg).total

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(run, jobs))
    else:
        vals = [run(j) for j in jobs]
    g = np.zeros_like(a)
    for k, d in enumerate(powers):
        plus, minus = vals[2 * k], vals[2 * k + 1]
        if not (math.isfinite(plus) and math.isfinite(minus)):
            raise GradientError(int(d))
        g[d] = (plus - minus) / (2 * jobs[2 * k][1])
    return g


class Adam:
    """Bias-corrected Adam over a single parameter vector."""

    def __init__(self, size: int, lr=1e-2, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainReport:
    model: PolyFilterModel
    initial_model: PolyFilterModel
    history: list = field(default_factory=list)
    best_step: int = 0
    best_loss: float = math.inf
    initial_loss: float = math.inf
    wall_clock: float = 0.0
    seed: int = 0
    diverged: bool = False

    def history_rows(self):
        """Rows of (step, E, P, S, total, validation_total)."""
        return [tuple(r) for r in self.history]

    def to_dict(self) -> dict:
        return {
            "design": self.model.design,
            "coeffs": self.model.coeffs.tolist(),
            "initial_coeffs": self.initial_model.coeffs.tolist(),
            "best_step": self.best_step,
            "best_loss": self.best_loss,
            "initial_loss": self.initial_loss,
            "wall_clock_s": self.wall_clock,
            "seed": self.seed,
            "diverged": self.diverged,
            "steps": len(self.history),
        }


# Block-index offsets keep training, validation and evaluation data disjoint.
VALIDATION_OFFSET = 1 << 40


def train(design: str, cfg: SystemConfig, weights: LossWeights, tcfg: TrainConfig,
          init: PolyFilterModel | None = None, log=None) -> TrainReport:
    """Optimise a polynomial filter; returns the best model on a fixed validation batch."""
    t0 = time.perf_counter()
    snr_db = reference_snr_db() if tcfg.train_snr_db is None else tcfg.train_snr_db
    sigma2 = chain.calibrate_noise(snr_db, cfg).sigma2
    model = init if init is not None else fit_to_rrc(design, cfg, tcfg.degree)
    if model.design != design:
        raise ValidationError(f"initial model has design {model.design!r}, expected {design!r}")
    initial = model.with_coeffs(model.coeffs.copy())
    val_batch = Batch(cfg, BlockStream(tcfg.seed, VALIDATION_OFFSET, tcfg.validation_blocks), sigma2)
    opt = Adam(len(model.coeffs), tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.eps)
    report = TrainReport(model=model, initial_model=initial, seed=tcfg.seed)

    def validate(m):
        return batch_loss(m, val_batch, weights, tcfg.auccdf, smooth=False).total

    report.initial_loss = report.best_loss = validate(model)
    for step in range(tcfg.steps):
        batch = Batch(cfg, BlockStream(tcfg.seed, step * tcfg.batch_blocks, tcfg.batch_blocks), sigma2)
        parts = batch_loss(model, batch, weights, tcfg.auccdf)
        try:
            if not math.isfinite(parts.total):
                raise GradientError(-1, "non-finite loss at the current point")
            g = grad_estimate(model, batch, weights, tcfg.fd_step, tcfg.auccdf, tcfg.threads)
        except GradientError:
            report.diverged = True
            break
        model = model.with_coeffs(opt.step(model.coeffs, g))
        val = validate(model)
        report.history.append((step, parts.E, parts.P, parts.S, parts.total, val))
        if val < report.best_loss:
            report.best_loss, report.best_step, report.model = val, step + 1, model
        if log is not None:
            log(f"step {step:4d}  E={parts.E:.4f} P={parts.P:.4f} S={parts.S:.4f} "
                f"total={parts.total:.4f} val={val:.4f}")
    report.wall_clock = time.perf_counter() - t0
    return report


def trained_taps(report: TrainReport, cfg: SystemConfig) -> FilterTaps:
    return eval_poly_filter(report.model, cfg)
