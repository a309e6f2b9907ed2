"""Experiment config file: YAML document with battery/env/sac/run sections.

Every field is optional and falls back to a documented default; unknown
keys are rejected so typos fail loudly. CLI flags override file values.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import yaml

from .dicke import BatterySpec, FREQUENCY_PRESETS
from .env import EnvConfig, REGIMES, RewardSchedule
from .experiment import RunConfig
from .sac import SACConfig


class ConfigError(ValueError):
    """Malformed or unknown configuration content."""


_BATTERY_KEYS = {"preset", "n_tls", "frequencies", "omega_c", "n_max", "n_init"}
_ENV_KEYS = {"tau", "k_steps", "lambda_min", "lambda_max", "regime", "reward"}
_REWARD_KEYS = {"c_start", "c_end", "anneal_fraction"}
_SAC_KEYS = set(SACConfig().to_dict())
_RUN_KEYS = {"episodes", "seeds", "eval_stride", "output_dir"}
_TOP_KEYS = {"battery", "env", "sac", "run"}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in section '{where}'; "
            f"allowed: {sorted(allowed)}"
        )


def default_config() -> dict:
    """Full default document (what an empty config file means)."""
    return {
        "battery": {"preset": "env1"},
        "env": {
            "tau": 5.6,
            "k_steps": 28,
            "lambda_min": -0.3,
            "lambda_max": 0.3,
            "regime": "FullState",
            "reward": {"c_start": 1.0, "c_end": 0.0, "anneal_fraction": 0.5},
        },
        "sac": SACConfig().to_dict(),
        "run": {
            "episodes": 5000,
            "seeds": [0, 1, 2, 3, 4],
            "eval_stride": 100,
            "output_dir": None,
        },
    }


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            out[k] = _merge(base[k], v)
        else:
            out[k] = v
    return out


def _build_spec(battery: dict) -> BatterySpec:
    _check_keys(battery, _BATTERY_KEYS, "battery")
    kwargs = {
        k: battery[k] for k in ("omega_c", "n_max", "n_init") if k in battery
    }
    if "preset" in battery and battery["preset"] is not None:
        name = battery["preset"]
        if name not in FREQUENCY_PRESETS:
            raise ConfigError(
                f"battery.preset {name!r} unknown; choose from "
                f"{sorted(FREQUENCY_PRESETS)}"
            )
        if "frequencies" in battery:
            raise ConfigError("battery: give either 'preset' or 'frequencies'")
        return BatterySpec.preset(name, **kwargs)
    if "frequencies" not in battery:
        raise ConfigError("battery: need 'preset' or 'frequencies'")
    freqs = battery["frequencies"]
    n_tls = battery.get("n_tls", len(freqs))
    try:
        return BatterySpec(n_tls=n_tls, frequencies=tuple(freqs), **kwargs)
    except ValueError as exc:
        raise ConfigError(f"battery: {exc}") from exc


def parse_config(doc: dict) -> RunConfig:
    """Turn a merged config document into a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(doc, _TOP_KEYS, "<root>")
    merged = _merge(default_config(), doc)
    # explicit frequencies replace the default preset instead of clashing
    battery_doc = doc.get("battery", {})
    if isinstance(battery_doc, dict) and "frequencies" in battery_doc:
        if "preset" not in battery_doc:
            merged["battery"].pop("preset", None)

    spec = _build_spec(merged["battery"])

    env_sec = merged["env"]
    _check_keys(env_sec, _ENV_KEYS, "env")
    reward_sec = env_sec.get("reward", {})
    _check_keys(reward_sec, _REWARD_KEYS, "env.reward")
    if env_sec["regime"] not in REGIMES:
        raise ConfigError(
            f"env.regime {env_sec['regime']!r} unknown; choose from {REGIMES}"
        )
    try:
        env = EnvConfig(
            spec=spec,
            tau=float(env_sec["tau"]),
            k_steps=int(env_sec["k_steps"]),
            lambda_min=float(env_sec["lambda_min"]),
            lambda_max=float(env_sec["lambda_max"]),
            regime=env_sec["regime"],
            reward_schedule=RewardSchedule(**reward_sec),
        )
    except ValueError as exc:
        raise ConfigError(f"env: {exc}") from exc

    sac_sec = merged["sac"]
    _check_keys(sac_sec, _SAC_KEYS, "sac")
    try:
        sac = SACConfig.from_dict(sac_sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sac: {exc}") from exc

    run_sec = merged["run"]
    _check_keys(run_sec, _RUN_KEYS, "run")
    try:
        return RunConfig(
            env=env,
            sac=sac,
            episodes=int(run_sec["episodes"]),
            seeds=tuple(int(s) for s in run_sec["seeds"]),
            eval_stride=int(run_sec["eval_stride"]),
            output_dir=run_sec["output_dir"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"run: {exc}") from exc


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Load a YAML config file (optional) and apply nested overrides."""
    doc: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        with open(p) as f:
            loaded = yaml.safe_load(f)
        if loaded is not None:
            doc = loaded
    if overrides:
        doc = _merge(doc, overrides)
    return parse_config(doc)


def dump_config(run: RunConfig) -> str:
    """Serialize a RunConfig back to the YAML document form."""
    doc = {
        "battery": run.env.spec.to_dict(),
        "env": {
            "tau": run.env.tau,
            "k_steps": run.env.k_steps,
            "lambda_min": run.env.lambda_min,
            "lambda_max": run.env.lambda_max,
            "regime": run.env.regime,
            "reward": {
                "c_start": run.env.reward_schedule.c_start,
                "c_end": run.env.reward_schedule.c_end,
                "anneal_fraction": run.env.reward_schedule.anneal_fraction,
            },
        },
        "sac": {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in run.sac.to_dict().items()},
        "run": {
            "episodes": run.episodes,
            "seeds": list(run.seeds),
            "eval_stride": run.eval_stride,
            "output_dir": run.output_dir,
        },
    }
    return yaml.safe_dump(doc, sort_keys=False)
