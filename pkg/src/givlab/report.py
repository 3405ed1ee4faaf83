"""Experiment runners producing tabular reports, and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__, arrow, engine, hilbert, symmetry
from .config import ExperimentConfig, build_system
from .errors import CollapseInconsistency, InvalidConfig, NonUnitaryTransition

PLOT_COLUMNS = ("series", "x", "y")

DEFAULT_ARROW = {"type": "arrow", "directions": {"A": 0.0, "B": math.pi / 2}, "symmetry_level": "isotropic"}
DEFAULT_GRID = {
    "probability_table": 181,
    "defect_scan": 181,
    "interference": 181,
    "sample": 19,
    "spin_half": 181,
    "isotropy_scan": 91,
}
DEFAULT_TRIALS = 100_000


@dataclass
class Report:
    experiment: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)
    status: str = "ok"
    # plot layout: rows are grouped into series by ``series_by`` columns
    series_by: tuple[str, ...] = ()
    x: str | None = None
    y: str | None = None

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite cell {value!r}")
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    text = str(value)
    if any(c in text for c in ',"\n'):
        raise ValueError(f"string cell {text!r} would need quoting")
    return text


def _plain(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError(f"non-finite cell {value!r}")
    return value


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_NONE)
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def to_json(report: Report) -> str:
    body = {
        "meta": report.meta,
        "rows": [dict(zip(report.columns, (_plain(v) for v in row))) for row in report.rows],
    }
    return json.dumps(body, indent=2, allow_nan=False) + "\n"


def emit_plot_data(report: Report) -> str:
    """Long-format ``series,x,y`` CSV. An empty report gives the header alone."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_NONE)
    w.writerow(PLOT_COLUMNS)
    if report.x is None or report.y is None:
        return buf.getvalue()
    kx = report.columns.index(report.x)
    ky = report.columns.index(report.y)
    ks = [report.columns.index(c) for c in report.series_by]
    for row in report.rows:
        series = ":".join(str(row[k]) for k in ks) if ks else report.y
        w.writerow([_cell(series), _cell(row[kx]), _cell(row[ky])])
    return buf.getvalue()


def _grid(cfg: ExperimentConfig) -> np.ndarray:
    n = cfg.grid or DEFAULT_GRID.get(cfg.experiment, 181)
    lo, hi = 0.0, math.pi
    if "range" in cfg.params:
        lo, hi = (cfg.angle(x) for x in cfg.params["range"])
    return np.linspace(lo, hi, n)


def _system(cfg: ExperimentConfig):
    return build_system(cfg.system or DEFAULT_ARROW, cfg.degrees)


def _need_arrow(system, what: str) -> arrow.ArrowSystem:
    if not isinstance(system, arrow.ArrowSystem):
        raise InvalidConfig(f"{what} needs an Arrow system (orientations are Arrow geometry)")
    return system


def _var(system, name: str | None, default_index: int, what: str) -> str:
    if name is None:
        if len(system.ids) <= default_index:
            raise InvalidConfig(f"{what}: system has too few variables")
        return system.ids[default_index]
    if name not in system.ids:
        raise InvalidConfig(f"{what}: unknown variable {name!r}")
    return name


def probability_table(cfg: ExperimentConfig) -> Report:
    system = _need_arrow(_system(cfg), "probability_table")
    grid = _grid(cfg)
    rows = []
    for v in system.ids:
        labels = system.variable(v).outcome_labels
        for k, label in enumerate(labels):
            for t in grid:
                p = engine.restricted_born(arrow.prepare(system, t), v, k)
                rows.append((float(t), v, label, p))
    return Report(
        "probability_table",
        ("orientation", "variable", "outcome", "probability"),
        rows,
        series_by=("variable", "outcome"),
        x="orientation",
        y="probability",
    )


def defect_scan(cfg: ExperimentConfig) -> Report:
    grid = _grid(cfg)
    if "pairs" in cfg.params:
        pairs = [(p["plus"], p["minus"]) for p in cfg.params["pairs"]]
    else:
        names = cfg.params.get("candidates", ["linear", "quadratic", "cosine_squared"])
        pairs = [(n, n) for n in names]
    rows = []
    for plus, minus in pairs:
        fp, fm = arrow.named_function(plus), arrow.named_function(minus)
        label = plus if plus == minus else f"{plus}/{minus}"
        for t in grid:
            t = min(max(float(t), 0.0), math.pi)
            od = engine.orthogonality_defect(fp, fm, t, t)
            ud = hilbert.unitarity_defect(engine.embed_pair(fp, fm, t, t).matrix)
            closure = abs(fp(t) + fp(math.pi - t) - 1.0)
            rows.append((label, t, od, ud, closure))
    return Report(
        "defect_scan",
        ("candidate", "theta", "orthogonality_defect", "unitarity_defect", "closure_residual"),
        rows,
        series_by=("candidate",),
        x="theta",
        y="orthogonality_defect",
    )


def _prepared_states(cfg: ExperimentConfig, system, default_var: str):
    prep = cfg.params.get("prepare")
    if prep == "grid":
        arrow_sys = _need_arrow(system, "prepare: grid")
        return [(float(t), arrow.prepare(arrow_sys, t)) for t in _grid(cfg)]
    if isinstance(prep, dict) and "orientation" in prep:
        t = cfg.angle(prep["orientation"])
        return [(t, arrow.prepare(_need_arrow(system, "prepare: orientation"), t))]
    if isinstance(prep, dict):
        e = prep["eigenstate"]
        var = _var(system, e["variable"], 0, "prepare")
        if e["index"] >= system.dim:
            raise InvalidConfig(f"prepare: index {e['index']} out of range")
        return [(f"{var}[{e['index']}]", system.eigenstate(var, e["index"]))]
    return [(f"{default_var}[0]", system.eigenstate(default_var, 0))]


def interference(cfg: ExperimentConfig) -> Report:
    system = _system(cfg)
    target = _var(system, cfg.params.get("target"), 0, "target")
    via = _var(system, cfg.params.get("via"), 1, "via")
    if via == target:
        raise InvalidConfig("via and target must differ")
    rows = []
    for prep, state in _prepared_states(cfg, system, target):
        for k, label in enumerate(system.variable(target).outcome_labels):
            d = engine.direct_probability(state, target, k)
            i = engine.indirect_probability(state, via, target, k)
            rows.append((prep, label, d, i, d - i, engine.interference_cross_term(state, via, target, k)))
    sweep = cfg.params.get("prepare") == "grid"
    return Report(
        "interference",
        ("prepared", "outcome", "direct", "indirect", "deviation", "cross_term"),
        rows,
        meta={"target": target, "via": via},
        series_by=("outcome",),
        x="prepared" if sweep else "outcome",
        y="deviation",
    )


def collapse_report(cfg: ExperimentConfig) -> Report:
    system = _system(cfg)
    ids = system.ids
    rows = []
    for a in ids:
        for b in ids:
            if a == b:
                continue
            s = symmetry.build_S_from_parallel_axes(system, a, b).matrix
            rows.append((a, b, hilbert.unitarity_defect(s), system.reciprocity_defect(a, b)))
    report = Report(
        "collapse_report",
        ("from", "to", "unitarity_defect", "reciprocity_defect"),
        rows,
        series_by=("from",),
        x="to",
        y="unitarity_defect",
    )
    try:
        merged = symmetry.collapse(system)
    except (NonUnitaryTransition, CollapseInconsistency) as exc:
        report.status = type(exc).__name__
        report.meta.update({"collapsed": False, "failure": str(exc), "pair": list(exc.pair), "defect": exc.defect})
    else:
        report.meta.update(
            {
                "collapsed": True,
                "reference": merged.reference,
                "born_defect": merged.born_defect,
                "transition_consistency_defect": merged.transition_consistency_defect,
            }
        )
    return report


def sample(cfg: ExperimentConfig, seed: int) -> Report:
    system = _need_arrow(_system(cfg), "sample")
    var = _var(system, cfg.params.get("variable"), 0, "variable")
    trials = cfg.trials or DEFAULT_TRIALS
    if cfg.params.get("sweep"):
        orientations = list(_grid(cfg))
    else:
        orientations = [cfg.angle(cfg.params.get("orientation", 0.0))]
    rows = []
    for stream, t in enumerate(orientations):
        table = arrow.sample_frequencies(system, t, var, trials, seed, stream=stream)
        for k, label in enumerate(table.outcomes):
            rows.append(
                (
                    float(t), stream, label, table.counts[k], float(table.frequencies[k]),
                    float(table.standard_errors[k]), table.probabilities[k],
                )
            )
    return Report(
        "sample",
        ("orientation", "stream", "outcome", "count", "frequency", "standard_error", "probability"),
        rows,
        meta={"variable": var, "trials": trials},
        series_by=("outcome",),
        x="orientation",
        y="frequency",
    )


def spin_half(cfg: ExperimentConfig) -> Report:
    grid = _grid(cfg)
    iso = arrow.build_arrow_system(arrow.ArrowConfig.uniform({"A": 0.0}))
    rows = []
    for t in grid:
        t = min(max(float(t), 0.0), math.pi)
        s = arrow.spin_half_reference(t)
        a = engine.restricted_born(arrow.prepare(iso, t), "A", 0)
        rows.append((t, s, a, abs(s - a)))
    bundle = symmetry.spin_half_bundle(len(grid))
    return Report(
        "spin_half",
        ("theta", "spin_half", "arrow_isotropic", "abs_difference"),
        rows,
        meta={
            "commutator_residual": bundle.commutator_residual,
            "group_order": bundle.group_order,
            "no_common_eigenbasis": bundle.no_common_eigenbasis,
            "rotation_max_deviation": bundle.rotation_max_deviation,
        },
        x="theta",
        y="spin_half",
    )


def isotropy(cfg: ExperimentConfig) -> Report:
    names = cfg.params.get("candidates", ["linear", "quadratic", "cosine_squared"])
    grid = cfg.grid or DEFAULT_GRID["isotropy_scan"]
    result = arrow.isotropy_scan([arrow.named_function(n) for n in names], grid)
    rows = [
        (r.name, r.max_composition_defect, r.max_closure_defect, "PASS" if r.passes else "FAIL")
        for r in result
    ]
    return Report(
        "isotropy_scan",
        ("candidate", "max_composition_defect", "max_closure_defect", "status"),
        rows,
        series_by=("candidate",),
        x="candidate",
        y="max_composition_defect",
    )


RUNNERS = {
    "probability_table": probability_table,
    "defect_scan": defect_scan,
    "interference": interference,
    "collapse_report": collapse_report,
    "sample": sample,
    "spin_half": spin_half,
    "isotropy_scan": isotropy,
}


def run_experiment(cfg: ExperimentConfig, seed: int) -> Report:
    runner = RUNNERS[cfg.experiment]
    report = runner(cfg, seed) if cfg.experiment == "sample" else runner(cfg)
    report.meta = {
        "experiment": cfg.experiment,
        "version": __version__,
        "seed": seed,
        "config_hash": cfg.config_hash(),
        "config": cfg.raw,
        "degrees": cfg.degrees,
        "status": report.status,
        **report.meta,
    }
    return report


def row_checks(report: Report, columns: Sequence[str] = ("probability", "direct", "indirect", "frequency")) -> None:
    """Probabilities in [0, 1] and every float finite."""
    for row in report.rows:
        for name, v in zip(report.columns, row):
            if isinstance(v, float):
                if not math.isfinite(v):
                    raise ValueError(f"non-finite {name}")
                if name in columns and not 0.0 <= v <= 1.0:
                    raise ValueError(f"{name} = {v!r} outside [0, 1]")
