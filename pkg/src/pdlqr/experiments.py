"""Configuration-driven Monte Carlo experiment runner.

One experiment = one plant + weights + initial gain + a seed list; every
seed collects its own dataset and every configured estimation scheme is run
on that same dataset. Per-trial rows and per-iteration aggregates are
written as deterministic CSV so any plotting stack can consume them.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import collect_dataset, save_dataset
from .errors import ConfigError, DomainError
from .lqr import CostWeights, LinearSystem, solve_dare
from .policy_gradient import ESTIMATORS, METHODS, PgmConfig, RunTrace, run_modelfree

_FMT = "%.17g"

#: Built-in experiment presets, selectable via --preset on the CLI.
PRESETS: dict[str, dict] = {
    "paper": {
        "system": {
            "A": [[1.01, 0.01, 0.0], [0.01, 1.01, 0.01], [0.0, 0.01, 1.01]],
            "B": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            "sigma_w": [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]],
        },
        "weights": {
            "Q": [[0.001, 0.0, 0.0], [0.0, 0.001, 0.0], [0.0, 0.0, 0.001]],
            "R": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        },
        "gain0": "dare:100Q",
        "data": {
            "n": 100,
            "sigma_x": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            "sigma_u": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            "seeds": {"start": 0, "count": 30},
        },
        "pgm": {"method": "npg", "step": 0.05, "iterations": 50,
                "stability_guard": True},
        "estimators": [
            {"kind": "cspd", "radius": 1.0, "step_coeff": 0.001},
            {"kind": "ls"},
            {"kind": "multi_epoch", "radius": 1.0, "step_coeff": 0.001,
             "epoch_sizes": [8, 16, 24, 52], "d0": 1.0},
            {"kind": "sysid"},
        ],
        "analysis": {"delta": 0.36787944117144233, "c1": 1.0, "c2": 1.0,
                     "sigma": 0.5, "epsilon": 0.01},
    },
    "scalar": {
        "system": {"A": [[0.5]], "B": [[1.0]], "sigma_w": [[0.1]]},
        "weights": {"Q": [[1.0]], "R": [[1.0]]},
        "gain0": [[0.0]],
        "data": {"n": 200, "sigma_x": [[1.0]], "sigma_u": [[1.0]],
                 "seeds": {"start": 0, "count": 10}},
        "pgm": {"method": "npg", "step": 0.1, "iterations": 30,
                "stability_guard": True},
        "estimators": [{"kind": "ls"}, {"kind": "exact"}],
        "analysis": {"delta": 0.36787944117144233, "c1": 1.0, "c2": 1.0,
                     "sigma": 0.5, "epsilon": 0.01},
    },
}


@dataclass(frozen=True)
class SchemeSpec:
    """One estimation scheme entry of the experiment configuration."""

    name: str
    kind: str
    options: dict = field(default_factory=dict)

    def pgm_config(self, method: str, step: float, iterations: int,
                   stability_guard: bool) -> PgmConfig:
        allowed = {"radius", "center", "step_coeff", "epoch_sizes", "d0"}
        unknown = set(self.options) - allowed
        if unknown:
            raise ConfigError(
                f"estimator {self.name!r} has unknown options {sorted(unknown)}"
            )
        extra = dict(self.options)
        if "epoch_sizes" in extra:
            extra["epoch_sizes"] = tuple(int(v) for v in extra["epoch_sizes"])
        return PgmConfig(method=method, step=step, max_iters=iterations,
                         estimator=self.kind, stability_guard=stability_guard,
                         **extra)


@dataclass
class ExperimentConfig:
    system: LinearSystem
    weights: CostWeights
    gain0: np.ndarray
    n_samples: int
    sigma_x: np.ndarray
    sigma_u: np.ndarray
    seeds: list[int]
    method: str
    step: float
    iterations: int
    stability_guard: bool
    schemes: list[SchemeSpec]
    analysis: dict
    raw: dict


def _matrix(raw, what: str) -> np.ndarray:
    try:
        m = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} is not a numeric matrix")
    if m.ndim != 2:
        raise ConfigError(f"{what} must be a 2-D matrix")
    return m


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _resolve_seeds(raw) -> list[int]:
    if isinstance(raw, dict):
        try:
            start, count = int(raw["start"]), int(raw["count"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("seed range needs integer 'start' and 'count'")
        if count < 1:
            raise ConfigError("seed list must be nonempty")
        return list(range(start, start + count))
    try:
        seeds = [int(s) for s in raw]
    except (TypeError, ValueError):
        raise ConfigError("seeds must be a list of integers or a start/count range")
    if not seeds:
        raise ConfigError("seed list must be nonempty")
    return seeds


def _resolve_gain0(raw, system: LinearSystem, weights: CostWeights) -> np.ndarray:
    if isinstance(raw, str):
        if raw == "dare":
            gain, _ = solve_dare(system, weights)
            return gain
        if raw.startswith("dare:") and raw.endswith("Q"):
            try:
                scale = float(raw[len("dare:"):-1])
            except ValueError:
                raise ConfigError(f"cannot parse gain0 spec {raw!r}")
            gain, _ = solve_dare(system, CostWeights(scale * weights.Q, weights.R))
            return gain
        raise ConfigError(f"unrecognized gain0 spec {raw!r}")
    return _matrix(raw, "gain0")


def resolve_config(raw: dict) -> ExperimentConfig:
    """Validate a raw (JSON-shaped) configuration into typed objects."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    preset_name = raw.get("preset")
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}")
        merged = _deep_merge(PRESETS[preset_name], {k: v for k, v in raw.items() if k != "preset"})
    else:
        merged = raw
    try:
        system_raw = merged["system"]
        weights_raw = merged["weights"]
        data_raw = merged["data"]
        pgm_raw = merged["pgm"]
    except KeyError as exc:
        raise ConfigError(f"configuration is missing section {exc.args[0]!r}")
    try:
        system = LinearSystem(
            _matrix(system_raw["A"], "system.A"),
            _matrix(system_raw["B"], "system.B"),
            _matrix(system_raw["sigma_w"], "system.sigma_w"),
        )
        weights = CostWeights(
            _matrix(weights_raw["Q"], "weights.Q"),
            _matrix(weights_raw["R"], "weights.R"),
        )
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"missing matrix {exc.args[0]!r}")
    except Exception as exc:
        raise ConfigError(f"invalid system or weights: {exc}")
    gain0 = _resolve_gain0(merged.get("gain0", "dare"), system, weights)
    if gain0.shape != (system.n_u, system.n_x):
        raise ConfigError(
            f"gain0 has shape {gain0.shape}, expected {(system.n_u, system.n_x)}"
        )
    n_samples = int(data_raw.get("n", 100))
    if n_samples < 1:
        raise ConfigError("data.n must be >= 1")
    sigma_x = _matrix(data_raw.get("sigma_x", np.eye(system.n_x)), "data.sigma_x")
    sigma_u = _matrix(data_raw.get("sigma_u", np.eye(system.n_u)), "data.sigma_u")
    seeds = _resolve_seeds(data_raw.get("seeds", [0]))
    method = pgm_raw.get("method", "npg")
    if method not in METHODS:
        raise ConfigError(f"pgm.method must be one of {METHODS}")
    step = float(pgm_raw.get("step", 0.05))
    iterations = int(pgm_raw.get("iterations", 50))
    schemes = []
    for i, entry in enumerate(merged.get("estimators", [{"kind": "exact"}])):
        if "kind" not in entry:
            raise ConfigError(f"estimators[{i}] is missing 'kind'")
        kind = entry["kind"]
        if kind not in ESTIMATORS:
            raise ConfigError(f"estimators[{i}].kind must be one of {ESTIMATORS}")
        name = entry.get("name", kind)
        options = {k: v for k, v in entry.items() if k not in ("kind", "name")}
        schemes.append(SchemeSpec(name=name, kind=kind, options=options))
    if len({s.name for s in schemes}) != len(schemes):
        raise ConfigError("estimator names must be unique")
    stability_guard = bool(pgm_raw.get("stability_guard", True))
    for scheme in schemes:
        try:
            pgm = scheme.pgm_config(method, step, iterations, stability_guard)
        except DomainError as exc:
            raise ConfigError(f"estimator {scheme.name!r}: {exc}")
        if scheme.kind == "multi_epoch" and sum(pgm.epoch_sizes) > n_samples:
            raise ConfigError(
                f"estimator {scheme.name!r} needs {sum(pgm.epoch_sizes)} samples "
                f"per run but data.n = {n_samples}"
            )
    return ExperimentConfig(
        system=system, weights=weights, gain0=gain0,
        n_samples=n_samples, sigma_x=sigma_x, sigma_u=sigma_u, seeds=seeds,
        method=method, step=step, iterations=iterations,
        stability_guard=stability_guard,
        schemes=schemes, analysis=dict(merged.get("analysis", {})),
        raw=merged,
    )


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")
    return resolve_config(raw)


@dataclass
class TrialResult:
    scheme: str
    seed: int
    trace: RunTrace
    wall_time_s: float

    @property
    def status(self) -> str:
        if self.trace.halted_at is None:
            return "ok"
        return f"guard_halted@{self.trace.halted_at}"


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list[TrialResult]

    def trial(self, scheme: str, seed: int) -> TrialResult:
        for t in self.trials:
            if t.scheme == scheme and t.seed == seed:
                return t
        raise KeyError((scheme, seed))

    def gap_matrix(self, scheme: str) -> np.ndarray:
        """(n_seeds, iterations+1) gaps, NaN-padded after guard halts."""
        rows = []
        width = self.config.iterations + 1
        for seed in self.config.seeds:
            gaps = self.trial(scheme, seed).trace.gaps
            rows.append(gaps + [float("nan")] * (width - len(gaps)))
        return np.asarray(rows)

    def aggregate_rows(self) -> list[tuple]:
        """Per (scheme, iteration): trial count, median gap, normalized std.

        Normalized std is the population standard deviation of the gap
        divided by its median at that iteration, over trials still running.
        """
        rows = []
        for scheme in [s.name for s in self.config.schemes]:
            gaps = self.gap_matrix(scheme)
            for it in range(gaps.shape[1]):
                column = gaps[:, it]
                live = column[~np.isnan(column)]
                if len(live) == 0:
                    continue
                median = float(np.median(live))
                std = float(np.std(live))
                norm_std = std / median if median != 0 else float("nan")
                rows.append((scheme, it, len(live), median, std, norm_std))
        return rows


def _run_trial(config: ExperimentConfig, scheme: SchemeSpec, seed: int) -> TrialResult:
    started = time.perf_counter()
    dataset = collect_dataset(config.system, config.n_samples,
                              config.sigma_x, config.sigma_u, seed)
    trace = run_modelfree(
        config.system, config.weights, config.gain0, dataset,
        scheme.pgm_config(config.method, config.step, config.iterations,
                          config.stability_guard),
    )
    return TrialResult(scheme=scheme.name, seed=seed, trace=trace,
                       wall_time_s=time.perf_counter() - started)


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run every (scheme, seed) trial; trials fan out across worker threads.

    Trials are independent and deterministic per seed, so the result is
    identical for any worker count; the reduce is ordered by (scheme, seed).
    """
    jobs = [(scheme, seed) for scheme in config.schemes for seed in config.seeds]
    if workers is None:
        workers = min(8, len(jobs)) or 1
    if workers <= 1:
        trials = [_run_trial(config, scheme, seed) for scheme, seed in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(lambda job: _run_trial(config, *job), jobs))
    order = {(s.name, seed): i for i, (s, seed) in enumerate(jobs)}
    trials.sort(key=lambda t: order[(t.scheme, t.seed)])
    return ExperimentResult(config=config, trials=trials)


def _format(value: float) -> str:
    return _FMT % value


def write_results(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Write trials.csv, aggregate.csv and the resolved configuration.

    The wall_time_s column is informational and is the one column excluded
    from byte-for-byte reproducibility.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    trial_lines = ["scheme,seed,iteration,gap,norm_gap,est_error,rho,status,wall_time_s"]
    for t in result.trials:
        trace = t.trace
        base = trace.gaps[0] if trace.gaps[0] != 0 else float("nan")
        for it in range(len(trace)):
            trial_lines.append(",".join([
                t.scheme, str(t.seed), str(it),
                _format(trace.gaps[it]),
                _format(trace.gaps[it] / base),
                _format(trace.est_errors[it]),
                _format(trace.radii[it]),
                t.status,
                _format(t.wall_time_s),
            ]))
    paths["trials"] = out / "trials.csv"
    paths["trials"].write_text("\n".join(trial_lines) + "\n")

    agg_lines = [
        "# normalized std = per-iteration population std of the gap divided"
        " by its median across trials",
        "scheme,iteration,n_trials,median_gap,std_gap,norm_std",
    ]
    for scheme, it, n, median, std, norm_std in result.aggregate_rows():
        agg_lines.append(",".join([
            scheme, str(it), str(n), _format(median), _format(std), _format(norm_std),
        ]))
    paths["aggregate"] = out / "aggregate.csv"
    paths["aggregate"].write_text("\n".join(agg_lines) + "\n")

    paths["config"] = out / "resolved_config.json"
    paths["config"].write_text(json.dumps(result.config.raw, indent=2, sort_keys=True) + "\n")
    return paths


def write_datasets(config: ExperimentConfig, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for seed in config.seeds:
        dataset = collect_dataset(config.system, config.n_samples,
                                  config.sigma_x, config.sigma_u, seed)
        path = out / f"dataset_seed{seed}.csv"
        save_dataset(dataset, path)
        paths.append(path)
    return paths
