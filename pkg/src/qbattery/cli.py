"""Command line interface: train, sweep, eval, plot, check, oracle.

Config precedence: built-in defaults < YAML config file < command flags.
Relative output directories resolve under $QBATTERY_OUTPUT_ROOT (default
"results"). Exit codes: 0 success, 1 runtime failure, 2 config/usage error.
"""

from __future__ import annotations

import csv as csv_mod
import json
import os
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import numerics, symmetric
from .config import ConfigError, dump_config, load_config
from .dicke import (
    FREQUENCY_PRESETS,
    BatterySpec,
    build_system,
    check_truncation,
    evolve_step,
    initial_state,
)
from .env import REGIMES, ChargingEnv, EnvConfig
from .ergotropy import ActionOutOfBoundsError, ergotropy_trajectory
from .experiment import (
    EPISODE_CSV_HEADER,
    evaluate_protocol,
    grid_oracle,
    read_best_protocol,
    sweep as run_sweep,
    train as run_train,
    write_best_protocol,
)
from .svgplot import PALETTE, Canvas, padded_limits


def _resolve_output(path: str | None) -> Path:
    root = Path(os.environ.get("QBATTERY_OUTPUT_ROOT", "results"))
    if path is None:
        return root / "run"
    p = Path(path)
    return p if p.is_absolute() else root / p


def _overrides(env, regime, episodes, seed, output):
    doc: dict = {"battery": {}, "env": {}, "run": {}}
    if env:
        doc["battery"]["preset"] = env
    if regime:
        doc["env"]["regime"] = regime
    if episodes is not None:
        doc["run"]["episodes"] = episodes
    if seed:
        doc["run"]["seeds"] = list(seed)
    if output:
        doc["run"]["output_dir"] = output
    return {k: v for k, v in doc.items() if v}


@click.group()
def main():
    """Inhomogeneous Dicke quantum battery charging toolkit."""


@main.command("train")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--env", type=click.Choice(sorted(FREQUENCY_PRESETS)), default=None)
@click.option("--regime", type=click.Choice(REGIMES), default=None)
@click.option("--episodes", type=int, default=None)
@click.option("--seed", type=int, multiple=True)
@click.option("--output", type=str, default=None, help="Output directory.")
@click.option("--log-every", type=int, default=200)
def cmd_train(config_path, env, regime, episodes, seed, output, log_every):
    """Train SAC on one (env, regime) cell over the configured seeds."""
    run = load_config(config_path, _overrides(env, regime, episodes, seed, output))
    out = _resolve_output(run.output_dir)
    env_name = env or "custom"
    cell = out / env_name / run.env.regime
    cell.mkdir(parents=True, exist_ok=True)
    (cell / "config.yaml").write_text(dump_config(run))
    best_rec = None
    for s in run.seeds:
        rec = run_train(
            run,
            s,
            csv_path=cell / f"seed{s}.csv",
            checkpoint_path=cell / f"seed{s}_checkpoint.npz",
            log_every=log_every,
        )
        click.echo(f"seed {s}: best ergotropy {rec.best_ergotropy:.6f}")
        if best_rec is None or rec.best_ergotropy > best_rec.best_ergotropy:
            best_rec = rec
    write_best_protocol(cell / "best_protocol.json", env_name, run.env.regime, best_rec)
    click.echo(f"wrote {cell}")


@main.command("sweep")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--envs", default="env1,env2,env3", show_default=True)
@click.option(
    "--regimes",
    default=",".join(REGIMES),
    show_default=True,
)
@click.option("--episodes", type=int, default=None)
@click.option("--seed", type=int, multiple=True)
@click.option("--output", type=str, default=None)
@click.option("--log-every", type=int, default=0)
def cmd_sweep(config_path, envs, regimes, episodes, seed, output, log_every):
    """Train every (env, regime) cell and write the summary table."""
    run = load_config(config_path, _overrides(None, None, episodes, seed, output))
    env_list = [e.strip() for e in envs.split(",") if e.strip()]
    regime_list = [r.strip() for r in regimes.split(",") if r.strip()]
    for e in env_list:
        if e not in FREQUENCY_PRESETS:
            raise ConfigError(f"unknown env preset {e!r}")
    for r in regime_list:
        if r not in REGIMES:
            raise ConfigError(f"unknown regime {r!r}")
    out = _resolve_output(run.output_dir)
    run = replace(run, output_dir=str(out))
    summary = run_sweep(run, env_list, regime_list, log_every=log_every)
    for e in env_list:
        for r in regime_list:
            s = summary[e][r]
            click.echo(
                f"{e} {r}: mean {s['mean']:.4f} max {s['max']:.4f} min {s['min']:.4f}"
            )
    click.echo(f"wrote {out / 'summary.json'}")


@main.command("eval")
@click.argument("protocol_path", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--env", type=click.Choice(sorted(FREQUENCY_PRESETS)), default=None)
@click.option("--output", type=click.Path(), default=None,
              help="Trajectory CSV path (default: protocol path with .traj.csv).")
def cmd_eval(protocol_path, config_path, env, output):
    """Replay a stored protocol and print its terminal ergotropy."""
    p = Path(protocol_path)
    if not p.exists():
        raise ConfigError(f"protocol file not found: {p}")
    try:
        doc = json.loads(p.read_text())
        actions = doc["actions"] if isinstance(doc, dict) else doc
        actions = [float(a) for a in actions]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed protocol file {p}: {exc}") from exc
    if env is None and isinstance(doc, dict) and doc.get("env") in FREQUENCY_PRESETS:
        env = doc["env"]
    run = load_config(config_path, _overrides(env, None, None, None, None))
    if len(actions) != run.env.k_steps:
        raise ConfigError(
            f"protocol has {len(actions)} actions, expected {run.env.k_steps}"
        )
    try:
        traj, terminal = evaluate_protocol(actions, run.env)
    except ActionOutOfBoundsError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(output) if output else p.with_suffix(".traj.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        w = csv_mod.writer(f)
        w.writerow(["time", "energy", "ergotropy"])
        for t, e, erg in traj:
            w.writerow([f"{t:.6f}", f"{e:.10f}", f"{erg:.10f}"])
    click.echo(f"{terminal:.10f}")


def _read_episode_csv(path: Path):
    with open(path) as f:
        r = csv_mod.reader(f)
        header = next(r)
        if ",".join(header) != EPISODE_CSV_HEADER:
            raise ConfigError(f"{path}: unexpected header {header}")
        rows = [[float(x) for x in row] for row in r]
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return np.array(rows)


def _training_curve(canvas_inputs, out_path, column_idx):
    episodes, series = canvas_inputs
    ylim = padded_limits(
        [v for mean, std in series.values() for v in (mean - std)]
        + [v for mean, std in series.values() for v in (mean + std)]
    )
    canvas = Canvas(
        xlim=(0, float(episodes[-1])),
        ylim=ylim,
        title="Ergotropy vs training episodes",
        xlabel="episode",
        ylabel="ergotropy",
    )
    legend = []
    for i, (name, (mean, std)) in enumerate(sorted(series.items())):
        color = PALETTE[i % len(PALETTE)]
        canvas.band(episodes, mean - std, mean + std, color)
        canvas.polyline(episodes, mean, color)
        legend.append((name, color))
    canvas.legend(legend)
    canvas.write(out_path)


@main.command("plot")
@click.argument("inputs", nargs=-1, required=True, type=click.Path())
@click.option("--kind", type=click.Choice(["training_curve", "protocol", "trajectory"]),
              required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--column", default="terminal_ergotropy",
              type=click.Choice(["terminal_ergotropy", "best_so_far", "shaped_return",
                                 "terminal_energy"]),
              help="Episode CSV column plotted by training_curve.")
@click.option("--data-only", is_flag=True,
              help="Write aggregated CSV data, skip SVG rendering.")
def cmd_plot(inputs, kind, out_path, column, data_only):
    """Render experiment artifacts as SVG figures.

    training_curve: per-group (parent directory) seed-mean line with a
    +/- one standard deviation band, one SVG per group plus a combined
    overlay when several groups are given. protocol: coupling staircase
    from a best-protocol JSON. trajectory: ergotropy vs time from an eval
    CSV.
    """
    out = Path(out_path)
    if kind == "training_curve":
        col = EPISODE_CSV_HEADER.split(",").index(column)
        groups: dict[str, list[np.ndarray]] = defaultdict(list)
        for path in inputs:
            p = Path(path)
            groups[p.parent.name or "run"].append(_read_episode_csv(p))
        series = {}
        episodes = None
        for name, arrays in groups.items():
            n = min(a.shape[0] for a in arrays)
            stack = np.stack([a[:n, col] for a in arrays])
            episodes = arrays[0][:n, 0]
            series[name] = (stack.mean(axis=0), stack.std(axis=0))
        if data_only or len(groups) > 1:
            out.mkdir(parents=True, exist_ok=True)
        if data_only:
            for name, (mean, std) in series.items():
                with open(out / f"{name}.csv", "w", newline="") as f:
                    w = csv_mod.writer(f)
                    w.writerow(["episode", "mean", "std"])
                    for e, m, s in zip(episodes, mean, std):
                        w.writerow([int(e), f"{m:.10f}", f"{s:.10f}"])
            click.echo(f"wrote {out}")
            return
        if len(groups) == 1:
            _training_curve((episodes, series), out, col)
            click.echo(f"wrote {out}")
        else:
            for name, data in series.items():
                _training_curve((episodes, {name: data}), out / f"{name}.svg", col)
            _training_curve((episodes, series), out / "combined.svg", col)
            click.echo(f"wrote {out}")
        return
    if len(inputs) != 1:
        raise ConfigError(f"{kind} takes exactly one input file")
    src = Path(inputs[0])
    if kind == "protocol":
        try:
            doc = read_best_protocol(src)
            actions = [float(a) for a in doc["actions"]]
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise ConfigError(f"malformed protocol file {src}: {exc}") from exc
        if data_only:
            click.echo("nothing to write for --data-only protocol plot")
            return
        tau = 5.6 * len(actions) / 28  # time axis spacing from default dt
        edges = [tau * k / len(actions) for k in range(len(actions) + 1)]
        canvas = Canvas(
            xlim=(0.0, edges[-1]),
            ylim=padded_limits(actions + [0.0]),
            title=f"Best protocol ({doc.get('env', '?')}, {doc.get('regime', '?')})",
            xlabel="time",
            ylabel="coupling",
        )
        canvas.staircase(edges, actions, PALETTE[0])
        canvas.write(out)
    else:  # trajectory
        with open(src) as f:
            r = csv_mod.reader(f)
            header = next(r, None)
            if header != ["time", "energy", "ergotropy"]:
                raise ConfigError(f"{src}: unexpected trajectory header {header}")
            try:
                rows = [[float(x) for x in row] for row in r]
            except ValueError as exc:
                raise ConfigError(f"{src}: bad row: {exc}") from exc
        if not rows:
            raise ConfigError(f"{src}: no data rows")
        if data_only:
            click.echo("trajectory input is already plain CSV; nothing to do")
            return
        ts = [row[0] for row in rows]
        es = [row[1] for row in rows]
        ws = [row[2] for row in rows]
        canvas = Canvas(
            xlim=(ts[0], ts[-1]),
            ylim=padded_limits(es + ws),
            title="Charging trajectory",
            xlabel="time",
            ylabel="energy / ergotropy",
        )
        canvas.polyline(ts, es, PALETTE[1])
        canvas.polyline(ts, ws, PALETTE[0])
        canvas.legend([("energy", PALETTE[1]), ("ergotropy", PALETTE[0])])
        canvas.write(out)
    click.echo(f"wrote {out}")


@main.command("check")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--rollouts", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_check(config_path, rollouts, seed):
    """Physics validation: truncation leakage, symmetric-subspace agreement,
    norm preservation. Exits nonzero if any check fails."""
    run = load_config(config_path, None)
    cfg = run.env
    rng = np.random.default_rng(seed)
    failures = 0

    # Truncation convergence on random protocols: observables at the working
    # truncation must match a larger reference truncation, and the reference
    # run must itself stay clear of its top two Fock levels.
    spec = cfg.spec
    ref_spec = BatterySpec(
        n_tls=spec.n_tls, frequencies=spec.frequencies, omega_c=spec.omega_c,
        n_max=spec.n_max + 4, n_init=spec.n_init,
    )
    split = build_system(spec)
    ref_split = build_system(ref_spec)
    max_dev = 0.0
    max_leak = 0.0
    n_protocols = max(1, rollouts // 4)
    for _ in range(n_protocols):
        protocol = rng.uniform(cfg.lambda_min, cfg.lambda_max, size=cfg.k_steps)
        work = ergotropy_trajectory(protocol, spec, split, cfg.dt,
                                    bounds=(cfg.lambda_min, cfg.lambda_max))
        ref = ergotropy_trajectory(protocol, ref_spec, ref_split, cfg.dt,
                                   bounds=(cfg.lambda_min, cfg.lambda_max))
        for (_, e1, w1), (_, e2, w2) in zip(work, ref):
            max_dev = max(max_dev, abs(e1 - e2), abs(w1 - w2))
        ref_state = initial_state(ref_spec)
        for lam in protocol:
            ref_state = evolve_step(ref_state, ref_split, lam, cfg.dt)
            max_leak = max(max_leak, check_truncation(ref_state, ref_spec))
    ok = max_dev < numerics.LEAKAGE_TOL
    failures += not ok
    click.echo(f"[{'PASS' if ok else 'FAIL'}] truncation convergence: "
               f"n_max={spec.n_max} vs {ref_spec.n_max} observable deviation "
               f"{max_dev:.3e} (tolerance {numerics.LEAKAGE_TOL:.0e})")
    ok = max_leak < numerics.LEAKAGE_TOL
    failures += not ok
    click.echo(f"[{'PASS' if ok else 'FAIL'}] reference-truncation leakage "
               f"{max_leak:.3e} (tolerance {numerics.LEAKAGE_TOL:.0e})")

    # Norm preservation on random-policy env rollouts.
    env = ChargingEnv(cfg)
    max_norm_defect = 0.0
    for _ in range(rollouts):
        env.reset(0)
        for _ in range(cfg.k_steps):
            a = rng.uniform(cfg.lambda_min, cfg.lambda_max)
            env.step(a)
            max_norm_defect = max(max_norm_defect, numerics.norm_defect(env.state.psi))
    ok = max_norm_defect < numerics.NORM_TOL * cfg.k_steps
    failures += not ok
    click.echo(f"[{'PASS' if ok else 'FAIL'}] norm preservation defect "
               f"{max_norm_defect:.3e}")

    # Homogeneous cross-check against the symmetric-subspace simulator.
    homo = BatterySpec.preset("homogeneous", n_max=cfg.spec.n_max)
    split = build_system(homo)
    worst = 0.0
    for _ in range(5):
        protocol = rng.uniform(cfg.lambda_min, cfg.lambda_max, size=cfg.k_steps)
        full = ergotropy_trajectory(protocol, homo, split, cfg.dt,
                                    bounds=(cfg.lambda_min, cfg.lambda_max))
        sym = symmetric.simulate(protocol, homo.n_tls, homo.n_max, homo.n_init,
                                 cfg.dt)
        for (_, e1, w1), (_, e2, w2) in zip(full, sym):
            worst = max(worst, abs(e1 - e2), abs(w1 - w2))
    ok = worst < 1e-8
    failures += not ok
    click.echo(f"[{'PASS' if ok else 'FAIL'}] symmetric-subspace agreement "
               f"{worst:.3e} (tolerance 1e-08)")

    if failures:
        click.echo(f"{failures} check(s) failed")
        sys.exit(1)
    click.echo("all checks passed")


@main.command("oracle")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--env", type=click.Choice(sorted(FREQUENCY_PRESETS)), default=None)
@click.option("--levels", default="-0.3,0,0.3", show_default=True)
@click.option("--k-coarse", type=int, default=4, show_default=True)
@click.option("--output", type=click.Path(), default=None,
              help="Where to write the winning protocol JSON.")
def cmd_oracle(config_path, env, levels, k_coarse, output):
    """Exhaustive coarse bang-bang baseline search."""
    run = load_config(config_path, _overrides(env, None, None, None, None))
    try:
        level_list = [float(x) for x in levels.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --levels {levels!r}: {exc}") from exc
    protocol, best = grid_oracle(run.env, level_list, k_coarse)
    click.echo(f"best ergotropy {best:.10f}")
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        with open(output, "w") as f:
            json.dump(
                {"env": env or "custom", "regime": "oracle", "seed": None,
                 "actions": protocol, "terminal_ergotropy": best},
                f, indent=2,
            )
        click.echo(f"wrote {output}")


def run_main() -> int:
    try:
        main.main(standalone_mode=False)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 2
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except SystemExit as exc:
        return int(exc.code or 0)
    except click.Abort:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


def entrypoint():
    sys.exit(run_main())


if __name__ == "__main__":
    entrypoint()
