"""Acceptance criteria, one test each. Every test records a PASS/FAIL line that
is printed in the terminal summary.

Criteria 5-7 train filters at desk scale (about 1e5 blocks per filter) and
take several minutes in total.
"""
import functools
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import random_taps, record_acceptance
from test_chain import dense_pipeline

from fdss import experiments
from fdss.chain import SystemConfig, run_chain
from fdss.filters import (PolyFilterModel, active_powers, bell_report, eval_poly_filter,
                          fit_to_rrc, rrc_taps, save_filter)
from fdss.metrics import qpsk_ser
from fdss.rng import BlockStream
from fdss.trainer import Batch, LossWeights, grad_estimate, reference_snr_db
from fdss.chain import calibrate_noise

ROOT = Path(__file__).resolve().parents[1]
SPECS = ROOT / "experiments"


@pytest.fixture
def detail():
    return {}


def criterion(number, title):
    """Record the outcome of a criterion test; the ``detail`` fixture carries its summary."""
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            detail = kwargs["detail"]
            try:
                fn(*args, **kwargs)
            except BaseException:
                record_acceptance(number, title, False, detail.get("text", ""))
                raise
            record_acceptance(number, title, True, detail.get("text", ""))
        return inner
    return wrap


@criterion(1, "dense-matrix oracle equivalence")
def test_c1_oracle_equivalence(detail):
    cfg = SystemConfig(n_data=8, n_se=2, n_fft=32)
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(5):
        F = random_taps(rng, cfg)
        mats = dense_pipeline(cfg, F)
        s = rng.integers(1, 5, (100, cfg.n_data))
        out = run_chain(cfg, F, s, trace=True)
        x = out.trace["x"]
        for name, A in mats.items():
            got = out.y if name == "y" else out.trace[name]
            worst = max(worst, float(np.max(np.abs(got - x @ A.T))))
    elapsed = time.perf_counter() - t0
    detail["text"] = f"max error {worst:.1e}, {elapsed:.2f} s"
    assert worst < 1e-10
    assert elapsed < 1.0


@criterion(2, "zero-ISI noiseless loopback")
def test_c2_zero_isi_loopback(detail):
    cfg = SystemConfig()
    rng = np.random.default_rng(7)
    filters = [rrc_taps(cfg)]
    for _ in range(3):
        filters.append(eval_poly_filter(PolyFilterModel(rng.normal(0, 2, 11), "zero_isi"), cfg))
    t0 = time.perf_counter()
    errors = 0
    for F in filters:
        for part in BlockStream(31, 0, 10_000).split(1000):
            s = part.symbols(cfg.n_data, 4)
            errors += int(np.count_nonzero(run_chain(cfg, F, s).s_hat != s))
    elapsed = time.perf_counter() - t0
    detail["text"] = f"{errors} symbol errors over 4 filters x 1e4 blocks, {elapsed:.1f} s"
    assert errors == 0
    assert elapsed < 60


@pytest.mark.slow
@criterion(3, "noise calibration vs closed-form QPSK")
def test_c3_noise_calibration(tmp_path, detail):
    t0 = time.perf_counter()
    spec = experiments.load_spec(SPECS / "rrc-ser.json")
    summary = experiments.run(spec, tmp_path)
    measured = summary["snr_at_target_db"]["rrc"]
    reference = reference_snr_db(spec.ser["target"])
    elapsed = time.perf_counter() - t0
    detail["text"] = (f"SER 1e-2 at {measured:.3f} dB vs closed form {reference:.3f} dB "
                      f"(diff {measured - reference:+.3f}), {elapsed:.0f} s")
    assert abs(measured - reference) <= 0.1
    assert elapsed < 300


@pytest.mark.slow
@criterion(4, "RRC beats rectangular at CCDF 1e-3")
def test_c4_baseline_ordering(tmp_path, detail):
    t0 = time.perf_counter()
    summary = experiments.run(experiments.load_spec(SPECS / "baselines.json"), tmp_path)
    lv = summary["ccdf_level_db"]
    elapsed = time.perf_counter() - t0
    detail["text"] = f"RRC {lv['rrc']:.3f} dB, rectangular {lv['rect']:.3f} dB, {elapsed:.0f} s"
    assert lv["rect"] - lv["rrc"] > 0
    assert elapsed < 300


@pytest.fixture(scope="session")
def flat_family(tmp_path_factory):
    out = tmp_path_factory.mktemp("flat_family")
    spec = experiments.load_spec(SPECS / "flat-family.json").select("zero_isi", "flat")
    return spec, out, experiments.run(spec, out)["results"]


@pytest.mark.slow
@criterion(5, "learned zero-ISI and flat operating points")
def test_c5_flat_family(flat_family, detail):
    _, _, res = flat_family
    z, f = res["zero_isi"], res["flat"]
    detail["text"] = (f"zero-ISI gain {z['papr_gain_db']:.3f} dB loss {z['snr_loss_db']:.3f} dB; "
                      f"flat gain {f['papr_gain_db']:.3f} dB loss {f['snr_loss_db']:.3f} dB")
    assert abs(z["papr_gain_db"] - 0.5) <= 0.25
    assert z["snr_loss_db"] <= 0.05
    assert abs(f["papr_gain_db"] - 0.65) <= 0.25
    assert f["snr_loss_db"] <= 0.1


@pytest.mark.slow
@criterion(6, "non-flat PAPR-dominant bell")
def test_c6_limiting_case(tmp_path, detail):
    spec = experiments.load_spec(SPECS / "limiting-cases.json").select("learned_c")
    spec.ser = {**spec.ser, "skip": True}
    res = experiments.run(spec, tmp_path)["results"]["learned_c"]
    cfg = spec.config
    taps, _ = experiments.load_filter(tmp_path / "filter_learned_c.json", cfg)
    shape = bell_report(taps, cfg)
    detail["text"] = (f"gain {res['papr_gain_db']:.3f} dB, bell over data span {shape['data_span']}, "
                      f"over all taps {shape['full_band']}")
    assert res["papr_gain_db"] >= 1.0 - 0.25
    assert shape["data_span"]


@pytest.mark.slow
@criterion(7, "resampled vs retrained zero-ISI at wide extension")
def test_c7_resample_study(flat_family, tmp_path, detail):
    raw = json.loads((SPECS / "resample-study.json").read_text())
    ff = json.loads((SPECS / "flat-family.json").read_text())
    # reuse the zero-ISI filter trained for criterion 5: same config, seed and recipe
    assert raw["base"] == ff["candidates"]["zero_isi"]
    assert (raw["seed"], raw["config"]) == (ff["seed"], ff["config"])
    _, out, _ = flat_family
    raw["base"] = {"source": "file", "path": str(out / "filter_zero_isi.json")}
    spec = experiments.ExperimentSpec.from_dict(raw, SPECS)
    study = experiments.run(spec, tmp_path)
    rs, rt = study["resampled_gain_db"], study["retrained_gain_db"]
    detail["text"] = f"resampled {rs:.3f} dB, retrained {rt:.3f} dB, EBW {study['wide_ebw']:.3f}"
    assert rs >= 0.15
    assert rt >= rs - 0.05


@criterion(8, "metric and filter unit suite")
def test_c8_metric_suite(detail):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(ROOT / "tests" / "test_metrics.py"),
                           str(ROOT / "tests" / "test_filters.py")],
                          capture_output=True, text=True, cwd=ROOT)
    elapsed = time.perf_counter() - t0
    last = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    detail["text"] = f"{last.strip('= ')}"
    assert proc.returncode == 0, proc.stdout[-2000:]
    assert elapsed < 10


@criterion(9, "finite-difference gradient sanity")
def test_c9_gradient_sanity(detail):
    cfg = SystemConfig()
    sigma2 = calibrate_noise(reference_snr_db(), cfg).sigma2
    weights = LossWeights(lambda1=1.0, lambda2=1.0, gamma=1.0)
    rng = np.random.default_rng(99)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(10):
        design = ("non_flat", "flat", "zero_isi")[i % 3]
        model = fit_to_rrc(design, cfg)
        powers = active_powers(design, model.degree)
        c = model.coeffs.copy()
        c[powers] += 0.1 * rng.standard_normal(len(powers))
        model = model.with_coeffs(c)
        batch = Batch(cfg, BlockStream(1000 + i, 0, 256), sigma2)
        g1 = grad_estimate(model, batch, weights)
        g2 = grad_estimate(model, batch, weights, fd_step=0.5e-4)
        worst = max(worst, float(np.linalg.norm(g1 - g2) / np.linalg.norm(g2)))
        if design != "zero_isi":
            assert np.all(g1[1::2] == 0) and np.all(g2[1::2] == 0)
    elapsed = time.perf_counter() - t0
    detail["text"] = f"worst relative disagreement {worst:.2%}, {elapsed:.0f} s"
    assert worst <= 0.01
    assert elapsed < 60
