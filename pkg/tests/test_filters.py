import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdss.chain import SystemConfig, combined_gain
from fdss.errors import ConstraintViolation, DegenerateFilterError, ValidationError
from fdss.filters import (FilterTaps, PolyFilterModel, check_zero_isi, eval_poly_filter,
                          fit_to_rrc, from_record, load_filter, passband_constant, raised_cosine,
                          rect_taps, resample, rrc_taps, save_filter, support_values,
                          to_record, vestigial_complete, zero_isi_taps)
from fdss.metrics import spectral_flatness

CFG = SystemConfig()
WIDE = SystemConfig(n_data=288, n_se=48)

coeff_vectors = st.lists(st.floats(-3, 3, allow_nan=False), min_size=11, max_size=11)


def even_model(coeffs, design):
    c = np.array(coeffs)
    c[1::2] = 0
    return PolyFilterModel(c, design)


def test_support_non_flat_small():
    cfg = SystemConfig(n_data=2, n_se=1, n_fft=8)
    np.testing.assert_allclose(support_values("non_flat", cfg), [-1, -1 / 3, 1 / 3, 1], atol=1e-15)


@pytest.mark.parametrize("design", ["non_flat", "flat"])
def test_support_antisymmetric(design):
    s = support_values(design, CFG)
    np.testing.assert_array_equal(s, -s[::-1])


def test_support_flat_region_constant():
    s = support_values("flat", CFG)
    mid = s[2 * CFG.n_se: CFG.n_sc - 2 * CFG.n_se]
    assert np.all(np.abs(mid) == np.abs(mid[0]))
    assert s[0] == -1.0 and s[2 * CFG.n_se - 1] < 0


def test_support_zero_isi_length():
    s = support_values("zero_isi", CFG)
    assert len(s) == CFG.n_se
    assert np.all(np.diff(s) > 0)


def test_constant_polynomial_gives_flat_filter():
    c = np.zeros(11)
    c[0] = 1
    taps = eval_poly_filter(PolyFilterModel(c, "non_flat"), CFG)
    np.testing.assert_allclose(taps.values, 1 / math.sqrt(CFG.n_sc), rtol=1e-14)


def test_all_zero_is_degenerate():
    with pytest.raises(DegenerateFilterError):
        eval_poly_filter(PolyFilterModel(np.zeros(11), "non_flat"), CFG)


def test_odd_powers_rejected():
    c = np.zeros(11)
    c[3] = 1
    with pytest.raises(ValidationError):
        PolyFilterModel(c, "flat")


@settings(max_examples=50, deadline=None)
@given(coeff_vectors, st.sampled_from(["non_flat", "flat"]))
def test_symmetric_designs_satisfy_invariants(coeffs, design):
    c = np.array(coeffs)
    c[1::2] = 0
    if not np.any(np.maximum(np.polynomial.polynomial.polyval(support_values(design, CFG), c), 0)):
        return
    taps = eval_poly_filter(PolyFilterModel(c, design), CFG)
    taps.validate(atol=1e-12)
    if design == "flat":
        mid = taps.values[2 * CFG.n_se: CFG.n_sc - 2 * CFG.n_se]
        assert np.all(mid == mid[0])
        if mid[0] > 0:
            assert spectral_flatness(taps, CFG) == 0.0


@settings(max_examples=50, deadline=None)
@given(coeff_vectors, st.sampled_from([CFG, WIDE, SystemConfig(n_data=12, n_se=3, n_fft=32)]))
def test_zero_isi_any_coeffs(coeffs, cfg):
    taps = eval_poly_filter(PolyFilterModel(np.array(coeffs), "zero_isi"), cfg)
    taps.validate(atol=1e-12)
    assert check_zero_isi(taps, cfg) < 1e-10
    c_v = passband_constant(1.0, cfg.n_data)
    upper = taps.values[cfg.n_se: 2 * cfg.n_se]
    assert np.all(upper >= c_v / math.sqrt(2) - 1e-15) and np.all(upper <= c_v + 1e-15)
    np.testing.assert_allclose(combined_gain(taps, cfg), c_v ** 2, rtol=1e-12)


def test_zero_isi_upper_at_cv():
    c_v = passband_constant(1.0, CFG.n_data)
    taps = zero_isi_taps(np.full(CFG.n_se, c_v), CFG)
    assert np.all(taps.values[: CFG.n_se] == 0)
    np.testing.assert_allclose(taps.values[CFG.n_se: CFG.n_sc - CFG.n_se], c_v)
    assert abs(np.sum(taps.values ** 2) - CFG.n_data * c_v ** 2) < 1e-12
    assert abs(np.sum(taps.values ** 2) - 1.0) < 1e-12


def test_vestigial_examples(rng):
    c_v = 0.7
    np.testing.assert_array_equal(vestigial_complete(np.full(5, c_v), c_v), 0)
    np.testing.assert_allclose(vestigial_complete(np.full(5, c_v / math.sqrt(2)), c_v),
                               c_v / math.sqrt(2), rtol=1e-15)
    for _ in range(100):
        upper = rng.uniform(c_v / math.sqrt(2), c_v, 24)
        lower = vestigial_complete(upper, c_v)
        assert np.max(np.abs(lower ** 2 + upper[::-1] ** 2 - c_v ** 2)) < 1e-14
    with pytest.raises(ConstraintViolation):
        vestigial_complete(np.array([0.1]), c_v)
    with pytest.raises(ConstraintViolation):
        vestigial_complete(np.array([0.8]), c_v)


def test_passband_constant():
    assert passband_constant(1.0, 336) == pytest.approx(0.0545544725589981, abs=1e-15)
    assert passband_constant(1.0, 336) == pytest.approx(1 / math.sqrt(336), rel=1e-15)
    assert passband_constant(1.0, 1) == 1.0


def test_rrc_is_nyquist():
    for cfg in (CFG, WIDE, SystemConfig(n_data=12, n_se=3, n_fft=32)):
        taps = rrc_taps(cfg).validate(atol=1e-12)
        assert check_zero_isi(taps, cfg) < 1e-10


def test_rrc_midpoint_and_limits():
    assert raised_cosine(np.array([0.5]), 0.3)[0] == pytest.approx(0.5)
    assert math.sqrt(raised_cosine(np.array([-0.5]), 0.1)[0]) == pytest.approx(1 / math.sqrt(2))
    cfg0 = SystemConfig(n_data=16, n_se=0, n_fft=32)
    np.testing.assert_allclose(rrc_taps(cfg0).values, 0.25)
    np.testing.assert_allclose(rrc_taps(cfg0).values, rect_taps(cfg0, span="all").values)


def test_bell_is_not_nyquist():
    f = np.exp(-np.linspace(-2, 2, CFG.n_sc) ** 2)
    taps = FilterTaps(f / np.linalg.norm(f))
    assert check_zero_isi(taps, CFG) > 0.1


def test_resample_idempotent_and_squashed():
    rng = np.random.default_rng(8)
    for design in ("non_flat", "flat", "zero_isi"):
        model = fit_to_rrc(design, CFG)
        model = model.with_coeffs(model.coeffs + 0.05 * rng.standard_normal(11) *
                                  (np.arange(11) % 2 == 0 if design != "zero_isi" else 1))
        a = resample(model, CFG).values
        np.testing.assert_allclose(a, eval_poly_filter(model, CFG).values, atol=1e-12)
    zmodel = fit_to_rrc("zero_isi", CFG)
    wide = resample(zmodel, WIDE)
    c_v = passband_constant(1.0, WIDE.n_data)
    upper = wide.values[WIDE.n_se: 2 * WIDE.n_se]
    assert len(upper) == 48
    assert np.all((upper >= c_v / math.sqrt(2)) & (upper <= c_v))
    assert check_zero_isi(wide, WIDE) < 1e-10


def test_rrc_fits_are_close():
    rrc = rrc_taps(CFG).values
    for design in ("non_flat", "flat", "zero_isi"):
        v = eval_poly_filter(fit_to_rrc(design, CFG), CFG).values
        assert np.max(np.abs(v - rrc)) < 0.2 * rrc.max()


def test_filter_validation():
    with pytest.raises(ValidationError):
        FilterTaps(np.array([0.6, -0.8])).validate()
    with pytest.raises(ValidationError):
        FilterTaps(np.array([1.0, 1.0])).validate()
    with pytest.raises(ValidationError):
        FilterTaps(np.array([0.6, 0.8])).validate()


def test_exchange_roundtrip(tmp_path):
    model = fit_to_rrc("zero_isi", CFG)
    taps = eval_poly_filter(model, CFG)
    path = tmp_path / "f.json"
    save_filter(path, taps, CFG, model)
    rec = json.loads(path.read_text())
    assert set(rec) == {"design", "degree", "coeffs", "n_data", "n_se", "e_fdss", "taps"}
    t2, m2 = load_filter(path, CFG)
    np.testing.assert_array_equal(t2.values, taps.values)
    np.testing.assert_array_equal(m2.coeffs, model.coeffs)
    t3, _ = load_filter(path, WIDE)
    assert len(t3) == WIDE.n_sc


def test_raw_taps_dimension_mismatch():
    rec = to_record(rrc_taps(CFG), CFG)
    with pytest.raises(ValidationError):
        from_record(rec, WIDE)
    taps, model = from_record(rec, CFG)
    assert model is None


def test_bell_shape_check():
    from fdss.filters import bell_report, is_bell
    assert is_bell([1, 2, 2, 1]) and is_bell([1, 2, 3, 2, 1])
    assert not is_bell([1, 2, 2, 2, 1])
    assert not is_bell([2, 1, 3, 1])
    assert not is_bell([2, 1, 3, 1], 0) and is_bell([2, 1, 3, 1], 1)
    rep = bell_report(rrc_taps(CFG), CFG)
    assert not rep["data_span"] and not rep["full_band"]


def test_tiny_coefficients_normalize_cleanly(default_cfg):
    # squared taps underflow to zero unless the vector is rescaled first
    coeffs = np.zeros(11)
    coeffs[10] = 7.7e-160
    taps = eval_poly_filter(PolyFilterModel(coeffs, "non_flat"), default_cfg)
    taps.validate(atol=1e-12)
    assert np.all(np.isfinite(taps.values))
