"""Training orchestration: seeded runs, logging, sweeps, brute-force oracle.

One master seed per run derives independent child streams for network
initialization, action sampling, warmup exploration, replay sampling, and
update noise (in that fixed order), so changing how one subsystem consumes
randomness cannot silently reshuffle the others.
"""

from __future__ import annotations

import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path

import numpy as np

from .dicke import BatterySpec
from .env import ChargingEnv, EnvConfig
from .ergotropy import ergotropy_trajectory
from .dicke import build_system
from .sac import ReplayBuffer, SACAgent, SACConfig

EPISODE_CSV_HEADER = (
    "episode,shaped_return,terminal_energy,terminal_ergotropy,best_so_far"
)

STREAM_NAMES = ("init", "action", "warmup", "buffer", "update")


class CombinatorialBudgetExceededError(ValueError):
    """Grid oracle would enumerate too many protocols."""


@dataclass(frozen=True)
class RunConfig:
    env: EnvConfig
    sac: SACConfig = field(default_factory=SACConfig)
    episodes: int = 5000
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    eval_stride: int = 100
    output_dir: str | None = None

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be positive")
        if not self.seeds:
            raise ValueError("need at least one seed")


@dataclass
class TrainingRecord:
    per_episode: list[tuple[int, float, float, float, float]]
    best_protocol: list[float]
    best_ergotropy: float
    seed: int


def rng_streams(master_seed: int) -> dict[str, np.random.Generator]:
    """Named independent child generators derived from one master seed."""
    children = np.random.SeedSequence(master_seed).spawn(len(STREAM_NAMES))
    return {
        name: np.random.default_rng(child)
        for name, child in zip(STREAM_NAMES, children)
    }


def train(
    run: RunConfig,
    seed: int,
    csv_path: str | Path | None = None,
    checkpoint_path: str | Path | None = None,
    log_every: int = 0,
) -> TrainingRecord:
    """Train one SAC agent; deterministic given (run config, seed).

    Every explored episode's terminal unshaped ergotropy is logged; the best
    protocol tracked is the action sequence of the best such episode, never
    the shaped return.
    """
    cfg = run.env
    env = ChargingEnv(cfg, total_episodes=run.episodes)
    streams = rng_streams(seed)
    agent = SACAgent(
        cfg.observation_dim, cfg.lambda_min, cfg.lambda_max, run.sac,
        streams["init"],
    )
    buffer = ReplayBuffer(run.sac.buffer_capacity, cfg.observation_dim)
    sac = run.sac
    rows: list[tuple[int, float, float, float, float]] = []
    best = -math.inf
    best_protocol: list[float] = []
    total_steps = 0
    t0 = time.time()

    writer = None
    fh = None
    if csv_path is not None:
        Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
        fh = open(csv_path, "w", newline="")
        fh.write(EPISODE_CSV_HEADER + "\n")
        writer = csv.writer(fh)
    try:
        for ep in range(run.episodes):
            obs = env.reset(ep).vector()
            actions: list[float] = []
            shaped_return = 0.0
            res = None
            for _ in range(cfg.k_steps):
                if total_steps < sac.warmup_steps:
                    a = float(streams["warmup"].uniform(cfg.lambda_min, cfg.lambda_max))
                else:
                    a, _ = agent.sample_action(obs, streams["action"])
                res = env.step(a)
                nobs = res.obs.vector()
                buffer.push(obs, a, res.reward, nobs, res.done)
                obs = nobs
                actions.append(a)
                shaped_return += res.reward
                total_steps += 1
                if total_steps >= sac.warmup_steps and len(buffer) >= sac.batch_size:
                    for _ in range(sac.updates_per_step):
                        batch = buffer.sample(sac.batch_size, streams["buffer"])
                        agent.update(batch, streams["update"])
            terminal_energy = res.info.energy
            terminal_ergotropy = res.info.ergotropy
            if terminal_ergotropy > best:
                best = terminal_ergotropy
                best_protocol = list(actions)
            rows.append(
                (ep, shaped_return, terminal_energy, terminal_ergotropy, best)
            )
            if writer is not None:
                writer.writerow(
                    [ep, f"{shaped_return:.10f}", f"{terminal_energy:.10f}",
                     f"{terminal_ergotropy:.10f}", f"{best:.10f}"]
                )
                if ep % 50 == 0:
                    fh.flush()
            if log_every and (ep + 1) % log_every == 0:
                print(
                    f"seed {seed} ep {ep + 1}/{run.episodes} "
                    f"best {best:.4f} ({time.time() - t0:.0f}s)",
                    file=sys.stderr,
                    flush=True,
                )
    finally:
        if fh is not None:
            fh.close()
    if checkpoint_path is not None:
        Path(checkpoint_path).parent.mkdir(parents=True, exist_ok=True)
        agent.save(
            checkpoint_path,
            extra={"seed": seed, "episodes": run.episodes,
                   "best_ergotropy": best, "best_protocol": best_protocol},
        )
    return TrainingRecord(
        per_episode=rows, best_protocol=best_protocol,
        best_ergotropy=best, seed=seed,
    )


def evaluate_protocol(protocol, env_config: EnvConfig):
    """Deterministic rollout of a stored protocol.

    Returns (trajectory rows, terminal ergotropy); trajectory rows are
    (time, energy, ergotropy) with K+1 entries.
    """
    if len(protocol) != env_config.k_steps:
        raise ValueError(
            f"protocol has {len(protocol)} actions, expected {env_config.k_steps}"
        )
    split = build_system(env_config.spec)
    traj = ergotropy_trajectory(
        protocol, env_config.spec, split, env_config.dt,
        bounds=(env_config.lambda_min, env_config.lambda_max),
    )
    return traj, traj[-1][2]


def grid_oracle(
    env_config: EnvConfig,
    levels,
    k_coarse: int,
    budget: int = 100_000,
):
    """Exhaustive search over coarse piecewise-constant protocols.

    Each of the k_coarse segments holds one of the given levels over
    k_steps / k_coarse consecutive fine steps. Independent brute-force
    baseline; shares only the physics rollout with the learner.
    """
    levels = [float(x) for x in levels]
    if env_config.k_steps % k_coarse != 0:
        raise ValueError(
            f"k_steps={env_config.k_steps} not divisible by k_coarse={k_coarse}"
        )
    n_protocols = len(levels) ** k_coarse
    if n_protocols > budget:
        raise CombinatorialBudgetExceededError(
            f"{n_protocols} protocols exceed budget {budget}"
        )
    reps = env_config.k_steps // k_coarse
    split = build_system(env_config.spec)
    best = -math.inf
    best_protocol = None
    for combo in product(levels, repeat=k_coarse):
        protocol = [lvl for lvl in combo for _ in range(reps)]
        traj = ergotropy_trajectory(
            protocol, env_config.spec, split, env_config.dt,
            bounds=(env_config.lambda_min, env_config.lambda_max),
        )
        score = traj[-1][2]
        if score > best:
            best = score
            best_protocol = protocol
    return best_protocol, best


def summarize_seeds(records: list[TrainingRecord]) -> dict:
    bests = [r.best_ergotropy for r in records]
    return {
        "mean": float(np.mean(bests)),
        "max": float(np.max(bests)),
        "min": float(np.min(bests)),
        "per_seed": bests,
    }


def sweep(
    run: RunConfig,
    envs: list[str],
    regimes: list[str],
    log_every: int = 0,
) -> dict:
    """Train over every (env preset, regime, seed) cell and summarize.

    Writes per-seed episode CSVs, per-cell best-protocol JSONs and a nested
    summary JSON mirroring the mean/max/min table layout when
    run.output_dir is set.
    """
    out = Path(run.output_dir) if run.output_dir else None
    summary: dict = {}
    for env_name in envs:
        summary[env_name] = {}
        for regime in regimes:
            cell_cfg = replace(
                run.env,
                spec=BatterySpec.preset(env_name, n_max=run.env.spec.n_max),
                regime=regime,
            )
            cell_run = replace(run, env=cell_cfg)
            records = []
            cell_best = None
            for seed in run.seeds:
                csv_path = (
                    out / env_name / regime / f"seed{seed}.csv" if out else None
                )
                rec = train(cell_run, seed, csv_path=csv_path, log_every=log_every)
                records.append(rec)
                if cell_best is None or rec.best_ergotropy > cell_best.best_ergotropy:
                    cell_best = rec
            summary[env_name][regime] = summarize_seeds(records)
            if out:
                write_best_protocol(
                    out / env_name / regime / "best_protocol.json",
                    env_name, regime, cell_best,
                )
    if out:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "summary.json", "w") as f:
            json.dump(summary, f, indent=2)
    return summary


def write_best_protocol(path, env_name: str, regime: str, record: TrainingRecord) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(
            {
                "env": env_name,
                "regime": regime,
                "seed": record.seed,
                "actions": record.best_protocol,
                "terminal_ergotropy": record.best_ergotropy,
            },
            f,
            indent=2,
        )


def read_best_protocol(path) -> dict:
    with open(path) as f:
        return json.load(f)
