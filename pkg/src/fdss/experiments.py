"""Experiment specs and the commands behind the CLI.

A spec is a JSON document::

    {"kind": "compare", "seed": 7, "config": {...},
     "baseline": {"source": "rrc"},
     "candidates": {"flat": {"source": "train-inline", "design": "flat", ...}},
     "ccdf": {"n_blocks": 100000, "p": 0.001},
     "ser": {"snr_db": "auto", "target": 0.01}}

Filter sources are ``rrc``, ``rect``, ``file`` (path relative to the spec)
and ``train-inline``.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import montecarlo, report
from .chain import SystemConfig
from .errors import ConfigError, InsufficientSamplesError, ValidationError
from .filters import (DESIGNS, FilterTaps, PolyFilterModel, eval_poly_filter, fit_to_rrc,
                      load_filter, rect_taps, rrc_taps, save_filter)
from .metrics import (AuccdfConfig, analytic_snr_loss, ccdf_level, default_edges, papr_gain,
                      snr_at_ser, snr_loss)
from .trainer import LossWeights, TrainConfig, reference_snr_db, train

KINDS = ("ccdf", "ser-sweep", "train", "compare", "resample-study")
SOURCES = ("rrc", "rect", "file", "train-inline")

# Evaluation blocks start far past anything training touches.
EVAL_OFFSET = 1 << 44


@dataclass
class ExperimentSpec:
    kind: str
    config: SystemConfig
    seed: int = 0
    filters: dict = field(default_factory=dict)
    baseline: dict | None = None
    ccdf: dict = field(default_factory=dict)
    ser: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "ExperimentSpec":
        d = copy.deepcopy(d)
        kind = d.pop("kind", None)
        if kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
        cfg = SystemConfig.from_dict(d.pop("config", {}))
        seed = int(d.pop("seed", 0))
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        filters = d.pop("candidates", None) or d.pop("filters", None) or {}
        if "filter" in d:
            filters = {"learned": d.pop("filter")}
        spec = cls(kind, cfg, seed, dict(filters), d.pop("baseline", None),
                   d.pop("ccdf", {}), d.pop("ser", {}), d, Path(base_dir))
        spec.validate()
        return spec

    def validate(self):
        for name, src in self.sources():
            check_source(src, name, self.base_dir)
        n, p = int(self.ccdf.get("n_blocks", 100_000)), float(self.ccdf.get("p", 1e-3))
        if not 0 < p < 1:
            raise ConfigError("ccdf.p must lie in (0, 1)")
        if p * n < 100:
            raise InsufficientSamplesError(
                f"a CCDF readout at p={p:g} needs n_blocks >= {math.ceil(100 / p)}, got {n}")
        if self.kind == "compare" and self.baseline is None:
            raise ConfigError("compare needs a baseline filter")
        if self.kind == "resample-study" and "wide_config" not in self.extra:
            raise ConfigError("resample-study needs a wide_config")
        if self.kind != "resample-study" and not self.filters:
            raise ConfigError("spec names no filters")

    def sources(self):
        out = list(self.filters.items())
        if self.baseline is not None:
            out.append(("baseline", self.baseline))
        for key in ("base", "retrain"):
            if key in self.extra:
                out.append((key, self.extra[key]))
        return out

    def select(self, *names) -> "ExperimentSpec":
        """Copy of the spec restricted to some candidates."""
        missing = set(names) - set(self.filters)
        if missing:
            raise ConfigError(f"no such candidates: {sorted(missing)}")
        out = copy.copy(self)
        out.filters = {k: self.filters[k] for k in names}
        return out


def check_source(src: dict, name: str, base_dir: Path):
    kind = src.get("source")
    if kind not in SOURCES:
        raise ConfigError(f"filter {name!r}: source must be one of {SOURCES}")
    if kind == "file" and not (base_dir / src.get("path", "")).is_file():
        raise ConfigError(f"filter {name!r}: file {src.get('path')!r} not found")
    if kind == "train-inline" and src.get("design") not in DESIGNS:
        raise ConfigError(f"filter {name!r}: design must be one of {DESIGNS}")


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"spec file {str(path)!r} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"spec file {str(path)!r} is not valid JSON: {exc}") from None
    return ExperimentSpec.from_dict(d, path.parent)


# -- filter resolution -------------------------------------------------------

def auccdf_config(d: dict | None) -> AuccdfConfig:
    d = d or {}
    return AuccdfConfig.grid(d.get("bottom", 0.0), d.get("top", 10.0), d.get("step", 0.05),
                             d.get("sharpness", 100.0))


def train_config(src: dict, seed: int, threads: int) -> TrainConfig:
    t = dict(src.get("train", {}))
    t.setdefault("seed", seed)
    t["auccdf"] = auccdf_config(t.get("auccdf"))
    t["threads"] = threads
    try:
        return TrainConfig(**t)
    except TypeError as exc:
        raise ConfigError(f"bad train section: {exc}") from None


def weights_from(src: dict) -> LossWeights:
    try:
        return LossWeights(**src.get("weights", {}))
    except TypeError as exc:
        raise ConfigError(f"bad weights: {exc}") from None


@dataclass
class Resolved:
    taps: FilterTaps
    model: PolyFilterModel | None = None
    training: object = None


def resolve_filter(src: dict, cfg: SystemConfig, seed: int, base_dir: Path, threads: int = 1,
                   log=None) -> Resolved:
    kind = src["source"]
    e = float(src.get("e_fdss", 1.0))
    if kind == "rrc":
        return Resolved(rrc_taps(cfg, e))
    if kind == "rect":
        return Resolved(rect_taps(cfg, e, src.get("span", "data")))
    if kind == "file":
        taps, model = load_filter(base_dir / src["path"], cfg)
        return Resolved(taps, model)
    design = src["design"]
    tcfg = train_config(src, seed, threads)
    init = fit_to_rrc(design, cfg, tcfg.degree, e)
    rep = train(design, cfg, weights_from(src), tcfg, init=init, log=log)
    return Resolved(eval_poly_filter(rep.model, cfg), rep.model, rep)


# -- readouts ----------------------------------------------------------------

def _ccdf_params(spec: ExperimentSpec):
    c = spec.ccdf
    edges = default_edges(c.get("edge_step", 0.01), c.get("edge_top", 12.0))
    return int(c.get("n_blocks", 100_000)), float(c.get("p", 1e-3)), edges


def run_ccdf(spec, cfg, taps, threads):
    n, p, edges = _ccdf_params(spec)
    curve, _ = montecarlo.ccdf_campaign(cfg, taps, n, spec.seed, edges, threads=threads,
                                        start=EVAL_OFFSET)
    return curve, ccdf_level(curve, p)


def snr_grid(spec, cfg, taps) -> np.ndarray:
    grid = spec.ser.get("snr_db", "auto")
    if grid == "auto":
        # centred on the predicted crossing, wide enough to absorb Monte Carlo error
        target = float(spec.ser.get("target", 1e-2))
        centre = reference_snr_db(target) + analytic_snr_loss(taps, cfg)
        half, step = float(spec.ser.get("half_width", 1.0)), float(spec.ser.get("step", 0.25))
        grid = centre + step * np.arange(-round(half / step), round(half / step) + 1)
    return np.array([math.inf if v == "inf" else float(v) for v in grid])


def run_sweep(spec, cfg, taps, threads, grid=None):
    s = spec.ser
    grid = snr_grid(spec, cfg, taps) if grid is None else grid
    return montecarlo.ser_sweep(cfg, taps, grid, spec.seed, int(s.get("min_blocks", 10_000)),
                                int(s.get("min_errors", 400)), int(s.get("max_blocks", 200_000)),
                                threads=threads, start=EVAL_OFFSET)


def _write_filter(out: Path, name: str, res: Resolved, cfg: SystemConfig):
    save_filter(out / f"filter_{name}.json", res.taps, cfg, res.model)
    if res.training is not None:
        report.write_history_csv(out / f"history_{name}.csv", res.training.history_rows())
        report.write_json(out / f"train_{name}.json", res.training.to_dict())


def _taps_plot(out: Path, taps: dict):
    series = {k: (np.arange(1, len(v.values) + 1), v.values) for k, v in taps.items()}
    report.write_svg(out / "taps.svg", report.line_plot_svg(series, "subcarrier", "tap"))


# -- commands ----------------------------------------------------------------

def cmd_ccdf(spec: ExperimentSpec, out, threads: int = 1, log=None) -> dict:
    out = Path(out)
    cfg = spec.config
    curves, levels = {}, {}
    for name, src in spec.sources():
        res = resolve_filter(src, cfg, spec.seed, spec.base_dir, threads, log)
        curve, levels[name] = run_ccdf(spec, cfg, res.taps, threads)
        curves[name] = curve
        report.write_ccdf_csv(out / f"ccdf_{name}.csv", curve)
    series = {k: (c.edges, c.probs) for k, c in curves.items()}
    report.write_svg(out / "ccdf.svg", report.line_plot_svg(series, "PAPR (dB)", "CCDF", logy=True))
    summary = {"p": _ccdf_params(spec)[1], "n_blocks": _ccdf_params(spec)[0],
               "ccdf_level_db": levels}
    report.write_json(out / "summary.json", summary)
    return summary


def cmd_ser_sweep(spec: ExperimentSpec, out, threads: int = 1, log=None) -> dict:
    out = Path(out)
    cfg = spec.config
    target = float(spec.ser.get("target", 1e-2))
    sweeps, at_target = {}, {}
    for name, src in spec.sources():
        res = resolve_filter(src, cfg, spec.seed, spec.base_dir, threads, log)
        sw = sweeps[name] = run_sweep(spec, cfg, res.taps, threads)
        report.write_sweep_csv(out / f"ser_{name}.csv", sw)
        finite = np.isfinite(sw.snr_db)
        at_target[name] = snr_at_ser(type(sw)(sw.snr_db[finite], sw.ser[finite],
                                              sw.n_blocks[finite]), target)
    series = {k: (s.snr_db, s.ser) for k, s in sweeps.items()}
    report.write_svg(out / "ser.svg", report.line_plot_svg(series, "SNR (dB)", "SER", logy=True))
    summary = {"target_ser": target, "snr_at_target_db": at_target}
    report.write_json(out / "summary.json", summary)
    return summary


def cmd_train(spec: ExperimentSpec, out, threads: int = 1, log=None) -> dict:
    out = Path(out)
    cfg = spec.config
    results = {}
    for name, src in spec.filters.items():
        if src["source"] != "train-inline":
            raise ConfigError(f"train: filter {name!r} is not train-inline")
        res = resolve_filter(src, cfg, spec.seed, spec.base_dir, threads, log)
        _write_filter(out, name, res, cfg)
        results[name] = res.training.to_dict()
    _taps_plot(out, {k: load_filter(out / f"filter_{k}.json", cfg)[0] for k in results})
    report.write_json(out / "summary.json", results)
    return results


def compare_readouts(spec, cfg, base, cand, threads):
    """Gain and loss of ``cand`` vs ``base``; both use the same evaluation blocks."""
    p = _ccdf_params(spec)[1]
    target = float(spec.ser.get("target", 1e-2))
    cb, lb = run_ccdf(spec, cfg, base.taps, threads)
    cc, lc = run_ccdf(spec, cfg, cand.taps, threads)
    row = {"papr_gain_db": papr_gain(cb, cc, p), "ccdf_level_db": lc, "baseline_ccdf_level_db": lb,
           "analytic_snr_loss_db": analytic_snr_loss(cand.taps, cfg)
           - analytic_snr_loss(base.taps, cfg)}
    curves = {"baseline": cb, "candidate": cc}
    sweeps = {}
    if not spec.ser.get("skip", False):
        grid = np.union1d(snr_grid(spec, cfg, base.taps), snr_grid(spec, cfg, cand.taps))
        sb = run_sweep(spec, cfg, base.taps, threads, grid)
        sc = run_sweep(spec, cfg, cand.taps, threads, grid)
        row["snr_loss_db"] = snr_loss(sc, sb, target)
        row["snr_at_target_db"] = snr_at_ser(sc, target)
        sweeps = {"baseline": sb, "candidate": sc}
    return row, curves, sweeps


def cmd_compare(spec: ExperimentSpec, out, threads: int = 1, log=None) -> dict:
    out = Path(out)
    cfg = spec.config
    base = resolve_filter(spec.baseline, cfg, spec.seed, spec.base_dir, threads, log)
    rows, taps = {}, {"baseline": base.taps}
    ccdf_series, ser_series = {}, {}
    for name, src in spec.filters.items():
        cand = resolve_filter(src, cfg, spec.seed, spec.base_dir, threads, log)
        _write_filter(out, name, cand, cfg)
        taps[name] = cand.taps
        rows[name], curves, sweeps = compare_readouts(spec, cfg, base, cand, threads)
        report.write_ccdf_csv(out / f"ccdf_{name}.csv", curves["candidate"])
        ccdf_series[name] = (curves["candidate"].edges, curves["candidate"].probs)
        ccdf_series["baseline"] = (curves["baseline"].edges, curves["baseline"].probs)
        if sweeps:
            report.write_sweep_csv(out / f"ser_{name}.csv", sweeps["candidate"])
            ser_series[name] = (sweeps["candidate"].snr_db, sweeps["candidate"].ser)
        if log is not None:
            log(f"{name}: " + ", ".join(f"{k}={v:.3f}" for k, v in rows[name].items()))
    _write_filter(out, "baseline", base, cfg)
    report.write_svg(out / "ccdf.svg", report.line_plot_svg(ccdf_series, "PAPR (dB)", "CCDF", logy=True))
    if ser_series:
        report.write_svg(out / "ser.svg", report.line_plot_svg(ser_series, "SNR (dB)", "SER", logy=True))
    _taps_plot(out, taps)
    summary = {"p": _ccdf_params(spec)[1], "target_ser": float(spec.ser.get("target", 1e-2)),
               "results": rows}
    report.write_json(out / "comparison.json", summary)
    return summary


def cmd_resample_study(spec: ExperimentSpec, out, threads: int = 1, log=None) -> dict:
    out = Path(out)
    cfg = spec.config
    wide = SystemConfig.from_dict(spec.extra["wide_config"])
    base_src = spec.extra.get("base")
    if base_src is None:
        raise ConfigError("resample-study needs a base filter")
    base = resolve_filter(base_src, cfg, spec.seed, spec.base_dir, threads, log)
    if base.model is None:
        raise ValidationError("resample-study needs a polynomial base filter")
    _write_filter(out, "base", base, cfg)
    idempotence = float(np.max(np.abs(eval_poly_filter(base.model, cfg).values - base.taps.values)))

    resampled = Resolved(eval_poly_filter(base.model, wide), base.model)
    retrain_src = dict(spec.extra.get("retrain") or {**base_src, "source": "train-inline"})
    retrained = resolve_filter(retrain_src, wide, spec.seed, spec.base_dir, threads, log)
    _write_filter(out, "resampled", resampled, wide)
    _write_filter(out, "retrained", retrained, wide)

    p = _ccdf_params(spec)[1]
    ref = Resolved(rrc_taps(wide))
    wide_spec = copy.copy(spec)
    wide_spec.config = wide
    curves = {}
    for name, res in (("rrc", ref), ("resampled", resampled), ("retrained", retrained)):
        curves[name], _ = run_ccdf(wide_spec, wide, res.taps, threads)
        report.write_ccdf_csv(out / f"ccdf_{name}.csv", curves[name])
    cb, lb = run_ccdf(spec, cfg, rrc_taps(cfg), threads)
    cbase, _ = run_ccdf(spec, cfg, base.taps, threads)
    summary = {
        "p": p,
        "base_gain_db": papr_gain(cb, cbase, p),
        "resampled_gain_db": papr_gain(curves["rrc"], curves["resampled"], p),
        "retrained_gain_db": papr_gain(curves["rrc"], curves["retrained"], p),
        "idempotence_max_abs": idempotence,
        "wide_config": wide.to_dict(),
        "wide_ebw": wide.ebw,
    }
    series = {k: (c.edges, c.probs) for k, c in curves.items()}
    report.write_svg(out / "ccdf.svg", report.line_plot_svg(series, "PAPR (dB)", "CCDF", logy=True))
    _taps_plot(out, {"resampled": resampled.taps, "retrained": retrained.taps})
    report.write_json(out / "study.json", summary)
    return summary


COMMANDS = {
    "ccdf": cmd_ccdf,
    "ser-sweep": cmd_ser_sweep,
    "train": cmd_train,
    "compare": cmd_compare,
    "resample-study": cmd_resample_study,
}


def run(spec: ExperimentSpec, out, threads: int = 1, command: str | None = None, log=None) -> dict:
    command = command or spec.kind
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if command == "compare" and spec.baseline is None:
        raise ConfigError("compare needs a baseline filter")
    if command == "resample-study" and "wide_config" not in spec.extra:
        raise ConfigError("resample-study needs a wide_config")
    return COMMANDS[command](spec, out, threads, log)
