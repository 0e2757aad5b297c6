"""Monte Carlo campaigns over many OFDM blocks.

Work is cut into fixed-size chunks of block indices. Chunks may run on a
thread pool, but results are folded in chunk order, so every number is
independent of the thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import chain
from .chain import SystemConfig
from .metrics import CcdfAccumulator, SweepResult, default_edges, papr_db
from .rng import BlockStream


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def papr_samples(cfg: SystemConfig, F, n_blocks: int, seed: int, start: int = 0,
                 chunk: int = 1000, threads: int = 1) -> np.ndarray:
    """PAPR (dB) of ``n_blocks`` independent transmissions."""
    def run(stream: BlockStream):
        s = stream.symbols(cfg.n_data, cfg.mod_order)
        return papr_db(chain.transmit(cfg, F, s))

    parts = _map(run, BlockStream(seed, start, n_blocks).split(chunk), threads)
    return np.concatenate(parts) if parts else np.empty(0)


def ccdf_campaign(cfg: SystemConfig, F, n_blocks: int, seed: int, edges=None,
                  chunk: int = 1000, threads: int = 1, start: int = 0):
    """Return ``(CcdfCurve, papr_db samples)`` for ``n_blocks`` blocks."""
    edges = default_edges(0.01, 12.0) if edges is None else edges
    samples = papr_samples(cfg, F, n_blocks, seed, start, chunk, threads)
    return CcdfAccumulator(edges).add(samples).curve(), samples


def _chunk_errors(cfg, F, stream, noises):
    s = stream.symbols(cfg.n_data, cfg.mod_order)
    tx = chain.transmit(cfg, F, s)
    z = stream.unit_noise(cfg.n_fft)
    gains = chain.combined_gain(F, cfg)
    out = []
    for noise in noises:
        rx = tx + math.sqrt(noise.sigma2) * z if noise.sigma2 > 0 else tx
        R = chain.matched_filter(chain.receiver_front(rx, cfg), F)
        y = chain.idft_despread(chain.normalize(chain.se_combine(R, cfg.n_se), gains))
        out.append(int(np.count_nonzero(chain.demod(y) != s)))
    return out


def ser_sweep(cfg: SystemConfig, F, snr_grid, seed: int, min_blocks: int = 10_000,
              min_errors: int = 400, max_blocks: int = 200_000, chunk: int = 500,
              threads: int = 1, start: int = 0) -> SweepResult:
    """SER at each SNR, stopping a point once it has ``min_errors`` errors over
    at least ``min_blocks`` blocks (or hits ``max_blocks``).

    Every SNR point sees the same symbols and unit-variance noise, scaled per
    point, which keeps the curve monotone and comparisons between filters on
    common random numbers.
    """
    snr_grid = np.asarray(snr_grid, dtype=np.float64)
    noises = [chain.calibrate_noise(v, cfg) for v in snr_grid]
    errors = np.zeros(len(snr_grid), dtype=np.int64)
    blocks = np.zeros(len(snr_grid), dtype=np.int64)
    active = np.ones(len(snr_grid), dtype=bool)
    next_block = start
    wave = max(1, threads)
    while active.any():
        streams = [BlockStream(seed, next_block + i * chunk, chunk) for i in range(wave)]
        idx = np.flatnonzero(active)
        sub = [noises[i] for i in idx]
        results = _map(lambda st: _chunk_errors(cfg, F, st, sub), streams, threads)
        for res in results:
            for j, i in enumerate(idx):
                if not active[i]:
                    continue
                errors[i] += res[j]
                blocks[i] += chunk
                # a noiseless point cannot gain precision from more blocks
                enough = errors[i] >= min_errors or noises[i].sigma2 == 0
                done = blocks[i] >= min_blocks and enough
                if done or blocks[i] >= max_blocks:
                    active[i] = False
        next_block += wave * chunk
    return SweepResult(snr_grid, errors / (blocks * cfg.n_data), blocks, errors)
