"""Command-line experiment runner.

Subcommands: riccati (print the optimal solution), collect (write datasets),
run (Monte Carlo comparison of estimation schemes), plot (render result
CSVs as SVG), constants (print theoretical bounds and schedules).

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bounds import accelerated_schedule, bound_constants, epoch_plan
from .data import collect_dataset
from .errors import ConfigError, PdlqrError
from .experiments import (
    ExperimentConfig,
    PRESETS,
    load_config,
    resolve_config,
    run_experiment,
    write_datasets,
    write_results,
)
from .lqr import CostWeights, average_cost, bellman_parameters, solve_dare, stationary_covariance
from .policy_gradient import contraction_factors, required_accuracy
from .regression import bellman_regressors, informativity_floor
from .lqr import noise_lift
from .svgplot import Panel, Series, render_figure

_SIG = "%.12g"  # deterministic 12-significant-digit output


def _print_matrix(name: str, m: np.ndarray) -> None:
    print(f"{name} =")
    for row in np.atleast_2d(m):
        print("  [" + ", ".join(_SIG % v for v in row) + "]")


def _load(args) -> ExperimentConfig:
    if args.config:
        config = load_config(args.config)
    elif args.preset:
        config = resolve_config({"preset": args.preset})
    else:
        raise ConfigError("provide --config PATH or --preset NAME")
    if getattr(args, "seed_list", None):
        try:
            seeds = [int(s) for s in args.seed_list.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"cannot parse --seed-list {args.seed_list!r}")
        if not seeds:
            raise ConfigError("--seed-list must contain at least one seed")
        config.seeds = seeds
    return config


def _cmd_riccati(args) -> int:
    config = _load(args)
    gain_opt, p_opt = solve_dare(config.system, config.weights)
    _print_matrix("K_opt", gain_opt)
    _print_matrix("P_opt", p_opt)
    print("cost_opt = " + _SIG % float(np.trace(p_opt @ config.system.sigma_w)))
    gain0_spec = config.raw.get("gain0")
    if isinstance(gain0_spec, str):
        _print_matrix(f"K0 ({gain0_spec})", config.gain0)
        print("cost_at_K0 = " + _SIG % average_cost(config.system, config.weights, config.gain0))
    return 0


def _cmd_collect(args) -> int:
    config = _load(args)
    paths = write_datasets(config, args.out)
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_run(args) -> int:
    config = _load(args)
    result = run_experiment(config, workers=args.workers)
    paths = write_results(result, args.out)
    for name, path in paths.items():
        print(f"wrote {name}: {path}")
    halted = sum(1 for t in result.trials if t.trace.halted_at is not None)
    print(f"trials: {len(result.trials)} total, {halted} guard-halted")
    for scheme, it, n, median, _std, norm_std in result.aggregate_rows():
        if it == config.iterations:
            print(f"final median gap [{scheme}] = " + _SIG % median
                  + f"  (n={n}, norm_std=" + _SIG % norm_std + ")")
    return 0


def _read_aggregate(path: Path):
    lines = [ln for ln in path.read_text().splitlines()
             if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    idx = {name: i for i, name in enumerate(header)}
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append((
            parts[idx["scheme"]],
            int(parts[idx["iteration"]]),
            int(parts[idx["n_trials"]]),
            float(parts[idx["median_gap"]]),
            float(parts[idx["norm_std"]]),
        ))
    if not rows:
        raise ConfigError(f"{path}: no aggregate rows")
    return rows


def _cmd_plot(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for csv_path in args.results:
        rows = _read_aggregate(Path(csv_path))
        schemes = list(dict.fromkeys(r[0] for r in rows))  # first-appearance order
        gap_panel = Panel(title="optimality gap", xlabel="iteration",
                          ylabel="C(K) - C(K*)", log_y=True)
        std_panel = Panel(title="trial spread", xlabel="iteration",
                          ylabel="normalized std of gap", log_y=False)
        multi_trial = False
        for scheme in schemes:
            sel = [r for r in rows if r[0] == scheme]
            sel.sort(key=lambda r: r[1])
            gap_panel.series.append(Series(
                label=scheme, x=[r[1] for r in sel], y=[r[3] for r in sel]))
            if any(r[2] >= 2 for r in sel):
                multi_trial = True
                std_panel.series.append(Series(
                    label=scheme, x=[r[1] for r in sel], y=[r[4] for r in sel]))
        panels = [gap_panel] + ([std_panel] if multi_trial else [])
        out_path = out_dir / (Path(csv_path).stem + ".svg")
        render_figure(panels, out_path)
        print(f"wrote {out_path}")
    return 0


def _cmd_constants(args) -> int:
    config = _load(args)
    analysis = config.analysis
    delta = float(analysis.get("delta", np.exp(-1.0)))
    sigma = float(analysis.get("sigma", 0.5))
    epsilon = float(args.epsilon if args.epsilon is not None
                    else analysis.get("epsilon", 0.01))
    radius = 1.0
    for scheme in config.schemes:
        if scheme.kind in ("cspd", "multi_epoch"):
            radius = float(scheme.options.get("radius", 1.0))
            break
    d_x, d_y = 2.0 * radius, 2.0

    dataset = collect_dataset(config.system, config.n_samples,
                              config.sigma_x, config.sigma_u, config.seeds[0])
    regressors, _ = bellman_regressors(
        dataset.x, dataset.u, dataset.x_plus, config.gain0, config.weights,
        noise_lift(config.system.sigma_w))
    alpha = informativity_floor(regressors)
    consts = bound_constants(
        config.system, config.weights, config.gain0, config.sigma_x,
        config.sigma_u, delta, c1=float(analysis.get("c1", 1.0)),
        c2=float(analysis.get("c2", 1.0)), d_x=d_x,
        alpha=max(alpha, np.finfo(float).tiny))
    print("alpha (informativity floor, measured on seed "
          f"{config.seeds[0]}) = " + _SIG % alpha)
    for name in ("l_gamma", "m_gamma", "m_c", "m_x", "m_y", "omega_x", "omega_y"):
        print(f"{name} = " + _SIG % getattr(consts, name))
    xi_norm = float(np.linalg.norm(bellman_parameters(
        config.system, config.weights, config.gain0)))
    print("||xi(K0)|| = " + _SIG % xi_norm
          + f"  (primal ball radius {_SIG % radius}; "
          + ("inside" if xi_norm <= radius else "OUTSIDE - projection bias active") + ")")
    schedule = accelerated_schedule(consts, d_x, d_y, 5)
    print("schedule head (eta_k): " + ", ".join(_SIG % v for v in schedule.eta))
    print("schedule head (lambda_k): " + ", ".join(_SIG % v for v in schedule.lam))
    plan = epoch_plan(consts, d_y, d0=1.0, epsilon=min(epsilon, 1.0))
    print(f"epoch plan for estimation accuracy {_SIG % epsilon}: "
          f"S={plan.epochs}, sizes={list(plan.sizes)}, total={plan.total}")
    cost0 = average_cost(config.system, config.weights, config.gain0)
    gain_opt, p_opt = solve_dare(config.system, config.weights)
    gap0 = cost0 - float(np.trace(p_opt @ config.system.sigma_w))
    for method in ("npg", "gnm"):
        if method == "npg":
            from .lqr import solve_policy_lyapunov
            p0 = solve_policy_lyapunov(config.system, config.weights, config.gain0)
            eta = 1.0 / (2.0 * np.linalg.norm(
                config.weights.R + config.system.B.T @ p0 @ config.system.B, 2))
        else:
            eta = 0.5
        info = contraction_factors(config.system, config.weights, eta, method, sigma)
        budget = required_accuracy(config.system, config.weights, cost0,
                                   epsilon, sigma, method)
        bound = info.iteration_bound(gap0, epsilon)
        print(f"{method}: eta_max=" + _SIG % eta
              + " gamma=" + _SIG % info.gamma
              + " gamma_hat=" + _SIG % info.gamma_hat
              + f" iterations(eps={_SIG % epsilon})={bound}"
              + " est_error_budget=" + _SIG % budget)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdlqr",
        description="Model-free policy gradient experiments for the stochastic LQR",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--config", help="path to a JSON experiment configuration")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="use a built-in configuration preset")
        p.add_argument("--seed-list", help="comma-separated seed override")
        if out_default is not None:
            p.add_argument("--out", default=out_default, help="output directory")

    common(sub.add_parser("riccati", help="print the optimal gain, value matrix and cost"))
    common(sub.add_parser("collect", help="collect and save datasets"), out_default="out")
    run_p = sub.add_parser("run", help="run the Monte Carlo comparison")
    common(run_p, out_default="out")
    run_p.add_argument("--workers", type=int, default=None,
                       help="worker threads for trial fan-out")
    plot_p = sub.add_parser("plot", help="render aggregate CSVs as SVG figures")
    plot_p.add_argument("results", nargs="+", help="aggregate CSV files")
    plot_p.add_argument("--out", default="out", help="output directory")
    const_p = sub.add_parser("constants",
                             help="print theoretical constants, schedules and plans")
    common(const_p)
    const_p.add_argument("--epsilon", type=float, default=None,
                         help="target accuracy for plans and budgets")
    return parser


_HANDLERS = {
    "riccati": _cmd_riccati,
    "collect": _cmd_collect,
    "run": _cmd_run,
    "plot": _cmd_plot,
    "constants": _cmd_constants,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except PdlqrError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
