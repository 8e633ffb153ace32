"""Config-driven experiment harness with seeded, parallelizable trials.

A run expands its suite into a list of settings (data configuration plus
optimizer configuration), executes `trials` independent trials per setting,
and writes:

* trials.csv    -- one row per (setting, trial, algorithm)
* summary.csv   -- mean/sd per (setting, algorithm, metric)
* metadata.json -- full config, seed scheme, versions, timings
* traces/       -- per-trial iteration traces (and optional SVG charts)
                   when trace_every > 0

Trial i of setting s draws its data from seed base_seed + s * 1_000_000 + i;
the shared test sample of a setting uses offset 999_999.  Results are a pure
function of (config, base_seed): rows are computed independently per trial
and written in a fixed order, so the worker count never changes the output
bytes.  Floats are serialized with repr (shortest round-trip), which lets a
reader recompute the summary exactly.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .basis import make_shifted_legendre
from .links import get_link, get_loss
from .metrics import function_error, index_error, mean_squared_gap
from .optim import FitConfig, FitTrace, fit, standard_init
from .ppr import PprConfig, ppr_fit
from .synth import Truth, make_dataset, sample_unit_ball, truth_table1, truth_table2

SUITES = ("single", "table1", "table2")
SETTING_SEED_STRIDE = 1_000_000
TEST_SEED_OFFSET = 999_999
MAX_TRIALS = 900_000

TABLE1_SAMPLE_SIZES = (400, 2000, 10000)
# (d, m, variance, iterations, step).  The raw steps pair with the
# dispersion-normalized Gaussian deviance (y - mu)^2 / (2 sigma^2); this
# package's Gaussian loss is (y - mu)^2 / 2, so the equivalent dynamics
# need step / variance, which is what the settings builder uses.
TABLE2_PRESETS = (
    (4, 2, 0.125, 200, 0.3),
    (20, 5, 0.0625, 1000, 0.5),
    (50, 10, 0.05, 1000, 0.2),
)

_LINK_SHORT = {"log": "log", "inverse-softplus": "softplus", "identity": "identity"}


@dataclass
class ExperimentConfig:
    suite: str = "single"
    trials: int = 100
    base_seed: int = 0
    out_dir: str = "results"
    trace_every: int = 0
    workers: int = 1
    test_samples: int = 10000
    emit_svg: bool = False
    on_trial_failure: str = "abort"     # or "skip"
    # single-suite fields; for preset suites a non-None value narrows/overrides
    family: Optional[str] = None
    link: Optional[str] = None
    algorithms: Optional[Sequence[str]] = None
    d: Optional[int] = None
    m: Optional[int] = None
    n: Optional[int] = None
    n_basis: Optional[int] = None
    iterations: Optional[int] = None
    step_alpha: Optional[float] = None
    step_beta: Optional[float] = None
    variance: Optional[float] = None
    truth_kind: Optional[str] = None    # "table1" or "block"

    def __post_init__(self) -> None:
        if self.suite not in SUITES:
            raise ValueError(f"suite must be one of {SUITES}, got {self.suite!r}")
        if not 1 <= self.trials <= MAX_TRIALS:
            raise ValueError(f"trials must be in 1..{MAX_TRIALS}")
        if self.trace_every < 0:
            raise ValueError("trace_every must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.on_trial_failure not in ("abort", "skip"):
            raise ValueError("on_trial_failure must be 'abort' or 'skip'")


@dataclass
class Setting:
    """One fully resolved experiment cell."""

    label: str
    family: str
    link_name: str
    truth_kind: str
    d: int
    m: int
    n: int
    n_basis: int
    iterations: int
    step_alpha: float
    step_beta: float
    variance: Optional[float]
    algorithms: tuple[str, ...]
    ppr: Optional[PprConfig] = None

    def truth(self) -> Truth:
        if self.truth_kind == "table1":
            return truth_table1()
        return truth_table2(self.d, self.m, self.n_basis)


def settings_for(config: ExperimentConfig) -> list[Setting]:
    if config.suite == "table1":
        return _table1_settings(config)
    if config.suite == "table2":
        return _table2_settings(config)
    return [_single_setting(config)]


def _algorithms(config: ExperimentConfig, default: tuple[str, ...]) -> tuple[str, ...]:
    if config.algorithms is None:
        return default
    algs = tuple(a.lower() for a in config.algorithms)
    for a in algs:
        if a not in ("gd", "vi", "ppr"):
            raise ValueError(f"unknown algorithm {a!r}")
    return algs


def _table1_settings(config: ExperimentConfig) -> list[Setting]:
    links = ("log", "inverse-softplus") if config.link is None else (config.link,)
    sizes = TABLE1_SAMPLE_SIZES if config.n is None else (config.n,)
    settings = []
    for link_name in links:
        step = 1.0 if link_name == "log" else 4.0
        for n in sizes:
            iters = 1500 if (link_name == "inverse-softplus" and n == 400) else 1000
            settings.append(Setting(
                label=f"{_LINK_SHORT[link_name]}-n{n}",
                family="poisson",
                link_name=link_name,
                truth_kind="table1",
                d=4, m=2, n=n, n_basis=3,
                iterations=config.iterations or iters,
                step_alpha=config.step_alpha or step,
                step_beta=config.step_beta or step,
                variance=None,
                algorithms=_algorithms(config, ("gd", "vi")),
            ))
    return settings


def _table2_settings(config: ExperimentConfig) -> list[Setting]:
    presets = TABLE2_PRESETS
    if config.d is not None or config.m is not None:
        presets = [p for p in presets
                   if (config.d is None or p[0] == config.d)
                   and (config.m is None or p[1] == config.m)]
        if not presets:
            raise ValueError("no table2 preset matches the requested (d, m)")
    settings = []
    for d, m, variance, iters, step in presets:
        var = config.variance if config.variance is not None else variance
        settings.append(Setting(
            label=f"d{d}-m{m}",
            family="gaussian",
            link_name="identity",
            truth_kind="block",
            d=d, m=m,
            n=config.n or 2000,
            n_basis=3,
            iterations=config.iterations or iters,
            step_alpha=config.step_alpha or step / var,
            step_beta=config.step_beta or step / var,
            variance=var,
            algorithms=_algorithms(config, ("gd", "ppr")),
            ppr=PprConfig(m=m),
        ))
    return settings


def _single_setting(config: ExperimentConfig) -> Setting:
    family = (config.family or "poisson").lower()
    link_name = config.link or ("identity" if family == "gaussian" else "log")
    d = config.d or 4
    m = config.m or 2
    truth_kind = config.truth_kind or (
        "table1" if (d, m) == (4, 2) and family == "poisson" else "block")
    algorithms = _algorithms(config, ("gd", "vi"))
    if family == "gaussian" and config.variance is None:
        raise ValueError("gaussian single runs need a variance")
    return Setting(
        label="single",
        family=family,
        link_name=link_name,
        truth_kind=truth_kind,
        d=d, m=m,
        n=config.n or 2000,
        n_basis=config.n_basis or 3,
        iterations=config.iterations or 1000,
        step_alpha=config.step_alpha or 1.0,
        step_beta=config.step_beta or 1.0,
        variance=config.variance,
        algorithms=algorithms,
        ppr=PprConfig(m=m) if "ppr" in algorithms else None,
    )


def _trial_seed(base_seed: int, setting_idx: int, trial: int) -> int:
    return base_seed + setting_idx * SETTING_SEED_STRIDE + trial


def _test_seed(base_seed: int, setting_idx: int) -> int:
    return base_seed + setting_idx * SETTING_SEED_STRIDE + TEST_SEED_OFFSET


def _flags_string(pairs: list[tuple[str, int]]) -> str:
    return ";".join(f"{name}={value}" for name, value in pairs if value)


def _run_trial(setting: Setting, setting_idx: int, trial: int, base_seed: int,
               trace_every: int, test_samples: int, out_dir: str,
               emit_svg: bool) -> list[dict]:
    basis = make_shifted_legendre(setting.n_basis)
    truth = setting.truth()
    link = get_link(setting.link_name)
    seed = _trial_seed(base_seed, setting_idx, trial)
    data = make_dataset(setting.family, link, truth, setting.n, seed,
                        variance=setting.variance, basis=basis)
    test_X = sample_unit_ball(test_samples, setting.d,
                              _test_seed(base_seed, setting_idx))
    rows = []
    for algorithm in setting.algorithms:
        started = time.perf_counter()
        if algorithm == "ppr":
            estimate, trace = ppr_fit(data, setting.ppr or PprConfig(m=setting.m))
            wall_ms = (time.perf_counter() - started) * 1000.0
            idx_err = index_error(estimate.alpha, truth.alpha)[0]
            fn_err = mean_squared_gap(estimate.predict(test_X),
                                      truth.eta(test_X, basis))
            flags = _flags_string([("singular", trace.n_singular),
                                   ("gn_zero", trace.n_zero_gauss_newton)])
            if trace_every > 0:
                _write_ppr_trace(out_dir, setting.label, algorithm, trial, trace)
        else:
            cfg = FitConfig(
                algorithm=algorithm,
                iterations=setting.iterations,
                step_alpha=setting.step_alpha,
                step_beta=setting.step_beta,
                record_every=trace_every if trace_every > 0 else setting.iterations,
            )
            loss = get_loss(setting.family) if algorithm == "gd" else None
            init = standard_init(setting.d, setting.m, setting.n_basis)
            want_trace = trace_every > 0
            params, trace = fit(data, basis, link, loss, init, cfg,
                                truth=truth if want_trace else None,
                                test_X=test_X if want_trace else None)
            wall_ms = (time.perf_counter() - started) * 1000.0
            idx_err = index_error(params.alpha, truth.alpha)[0]
            fn_err = function_error(params, basis, truth, test_X)
            flags = _flags_string([
                ("floor", int(trace.loss_floor_events.sum())),
                ("degen", trace.degenerate_recoveries),
            ])
            if want_trace:
                _write_fit_trace(out_dir, setting.label, algorithm, trial,
                                 trace, emit_svg)
        rows.append({
            "setting": setting.label,
            "algorithm": algorithm,
            "seed": seed,
            "index_error": idx_err,
            "function_error": fn_err,
            "wall_ms": wall_ms,
            "flags": flags,
        })
    return rows


def _trace_path(out_dir: str, label: str, algorithm: str, trial: int,
                suffix: str = "csv") -> Path:
    traces = Path(out_dir) / "traces"
    traces.mkdir(parents=True, exist_ok=True)
    return traces / f"trace_{label}_{algorithm}_t{trial}.{suffix}"


def _write_fit_trace(out_dir: str, label: str, algorithm: str, trial: int,
                     trace: FitTrace, emit_svg: bool) -> None:
    path = _trace_path(out_dir, label, algorithm, trial)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective", "residual", "step_beta",
                         "step_alpha", "index_error", "function_error",
                         "loss_floor"])
        for i in range(len(trace)):
            writer.writerow([
                int(trace.iterations[i]),
                repr(float(trace.objective[i])),
                repr(float(trace.residual[i])),
                repr(float(trace.step_beta[i])),
                repr(float(trace.step_alpha[i])),
                repr(float(trace.index_error[i])) if trace.index_error is not None else "",
                repr(float(trace.function_error[i])) if trace.function_error is not None else "",
                int(trace.loss_floor_events[i]),
            ])
    if emit_svg and trace.index_error is not None:
        series = {"index error": (trace.iterations, trace.index_error)}
        if trace.function_error is not None:
            series["function error"] = (trace.iterations, trace.function_error)
        _svg_line_chart(_trace_path(out_dir, label, algorithm, trial, "svg"),
                        series, f"{label} / {algorithm} / trial {trial}",
                        "iteration", "error")


def _write_ppr_trace(out_dir: str, label: str, algorithm: str, trial: int,
                     trace) -> None:
    path = _trace_path(out_dir, label, algorithm, trial)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "sweep", "component", "inner_iter",
                         "rss_before", "rss_after"])
        for i in range(len(trace)):
            writer.writerow([trace.stage[i], trace.sweep[i], trace.component[i],
                             trace.inner_iter[i], repr(trace.rss_before[i]),
                             repr(trace.rss_after[i])])


@dataclass
class ExperimentResult:
    trials_csv: Path
    summary_csv: Path
    metadata_json: Path
    rows: list[dict]
    summary: list[dict]
    failures: list[dict]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute all settings of the configured suite and write the outputs."""
    settings = settings_for(config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [(s_idx, trial)
             for s_idx in range(len(settings))
             for trial in range(config.trials)]
    results: dict[tuple[int, int], list[dict]] = {}
    failures: list[dict] = []

    def handle(key: tuple[int, int], outcome, error) -> None:
        if error is None:
            results[key] = outcome
            return
        s_idx, trial = key
        record = {"setting": settings[s_idx].label, "trial": trial,
                  "seed": _trial_seed(config.base_seed, s_idx, trial),
                  "error": repr(error)}
        if config.on_trial_failure == "abort":
            raise RuntimeError(
                f"trial {trial} of setting {record['setting']} "
                f"(seed {record['seed']}) failed") from error
        failures.append(record)

    def task_args(key: tuple[int, int]):
        s_idx, trial = key
        return (settings[s_idx], s_idx, trial, config.base_seed,
                config.trace_every, config.test_samples, str(out_dir),
                config.emit_svg)

    if config.workers == 1:
        for key in tasks:
            try:
                outcome, error = _run_trial(*task_args(key)), None
            except Exception as exc:          # noqa: BLE001 - recorded or re-raised
                outcome, error = None, exc
            handle(key, outcome, error)
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {pool.submit(_run_trial, *task_args(key)): key
                       for key in tasks}
            for future, key in futures.items():
                try:
                    outcome, error = future.result(), None
                except Exception as exc:      # noqa: BLE001 - recorded or re-raised
                    outcome, error = None, exc
                handle(key, outcome, error)

    rows: list[dict] = []
    for s_idx in range(len(settings)):
        for trial in range(config.trials):
            for row in results.get((s_idx, trial), []):
                rows.append({"suite": config.suite, **row})

    trials_csv = out_dir / "trials.csv"
    _write_trials_csv(trials_csv, rows)
    summary = summarize_rows(rows)
    summary_csv = out_dir / "summary.csv"
    _write_summary_csv(summary_csv, summary)
    metadata_json = out_dir / "metadata.json"
    _write_metadata(metadata_json, config, settings, rows, failures)
    return ExperimentResult(trials_csv, summary_csv, metadata_json,
                            rows, summary, failures)


def _write_trials_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["suite", "setting", "algorithm", "seed",
                         "index_error", "function_error", "wall_ms", "flags"])
        for row in rows:
            writer.writerow([row["suite"], row["setting"], row["algorithm"],
                             row["seed"], repr(float(row["index_error"])),
                             repr(float(row["function_error"])),
                             repr(float(row["wall_ms"])), row["flags"]])


def summarize_rows(rows: list[dict]) -> list[dict]:
    """Mean and sample sd per (setting, algorithm, metric), in row order."""
    order: list[tuple[str, str]] = []
    grouped: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        key = (row["setting"], row["algorithm"])
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(row)
    summary = []
    for setting, algorithm in order:
        group = grouped[(setting, algorithm)]
        for metric in ("index_error", "function_error", "wall_ms"):
            values = np.array([float(g[metric]) for g in group])
            sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
            summary.append({
                "setting": setting,
                "algorithm": algorithm,
                "metric": metric,
                "mean": float(values.mean()),
                "sd": sd,
                "trials": len(values),
            })
    return summary


def _write_summary_csv(path: Path, summary: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "algorithm", "metric", "mean", "sd", "trials"])
        for row in summary:
            writer.writerow([row["setting"], row["algorithm"], row["metric"],
                             repr(row["mean"]), repr(row["sd"]), row["trials"]])


def _write_metadata(path: Path, config: ExperimentConfig,
                    settings: list[Setting], rows: list[dict],
                    failures: list[dict]) -> None:
    wall_totals: dict[str, float] = {}
    for row in rows:
        key = f"{row['setting']}/{row['algorithm']}"
        wall_totals[key] = wall_totals.get(key, 0.0) + float(row["wall_ms"])
    payload = {
        "version": __version__,
        "config": _config_dict(config),
        "seed_scheme": {
            "trial_seed": "base_seed + setting_index * 1000000 + trial",
            "test_seed": "base_seed + setting_index * 1000000 + 999999",
        },
        "settings": [
            {k: v for k, v in asdict(s).items() if k != "ppr"}
            | ({"ppr": asdict(s.ppr)} if s.ppr is not None else {})
            | {"test_seed": _test_seed(config.base_seed, i)}
            for i, s in enumerate(settings)
        ],
        "wall_ms_totals": wall_totals,
        "failures": failures,
        "generated_unix_time": time.time(),
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))


def _config_dict(config: ExperimentConfig) -> dict:
    out = asdict(config)
    if out.get("algorithms") is not None:
        out["algorithms"] = list(out["algorithms"])
    return out


def load_config(path) -> ExperimentConfig:
    """Read the flat JSON config schema; unknown keys are rejected."""
    with open(path) as fh:
        raw = json.load(fh)
    valid = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**raw)


def read_trials_csv(path) -> list[dict]:
    """Load a per-trial CSV back into row dicts with float metrics."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            rows.append({
                "suite": row["suite"],
                "setting": row["setting"],
                "algorithm": row["algorithm"],
                "seed": int(row["seed"]),
                "index_error": float(row["index_error"]),
                "function_error": float(row["function_error"]),
                "wall_ms": float(row["wall_ms"]),
                "flags": row["flags"],
            })
    return rows


def _svg_line_chart(path: Path, series: dict, title: str, xlabel: str,
                    ylabel: str) -> None:
    """Tiny standalone SVG chart; cosmetic output only."""
    width, height, margin = 640, 420, 60
    xs_all = np.concatenate([np.asarray(x, dtype=float) for x, _ in series.values()])
    ys_all = np.concatenate([np.asarray(y, dtype=float) for _, y in series.values()])
    finite = np.isfinite(ys_all) & (ys_all > 0)
    log_y = bool(finite.all() and ys_all.size)
    if log_y:
        ys_all = np.log10(ys_all)
    x_lo, x_hi = float(xs_all.min()), float(max(xs_all.max(), xs_all.min() + 1))
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {height / 2})">{ylabel}{" (log10)" if log_y else ""}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    for i, (name, (x, y)) in enumerate(series.items()):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if log_y:
            y = np.log10(np.maximum(y, 1e-300))
        points = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y)
                          if np.isfinite(b))
        color = colors[i % len(colors)]
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin - 4}" y="{margin + 16 + 16 * i}" '
                     f'text-anchor="end" font-size="12" fill="{color}">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
