"""Episodic charging environment over the battery physics.

One episode is K piecewise-constant coupling choices over total time tau.
The observation exposes one of four observability regimes plus the last
action and the normalized time; the reward blends energy gain and ergotropy
gain with an episode-indexed weight that anneals from energy-only towards
ergotropy-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics
from .dicke import (
    PAULI,
    BatterySpec,
    JointState,
    ParitySector,
    build_system,
    check_truncation,
    initial_state,
    reduced_pair,
    reduced_site,
)
from .ergotropy import ActionOutOfBoundsError, battery_spectrum, passive_energy

REGIMES = (
    "FullState",
    "Energies",
    "EnergiesFirstOrder",
    "EnergiesFirstSecondOrder",
)

AXES = ("x", "y", "z")


class EpisodeFinishedError(RuntimeError):
    """step() called after the episode terminated."""


@dataclass(frozen=True)
class RewardSchedule:
    """Linear anneal of the energy-vs-ergotropy reward weight.

    c = c_start at episode 0, reaching c_end at episode
    anneal_fraction * total_episodes and staying there. The shaped reward is
    c * dE + (1 - c) * dErgotropy.
    """

    c_start: float = 1.0
    c_end: float = 0.0
    anneal_fraction: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.anneal_fraction <= 1.0:
            raise ValueError(
                f"anneal_fraction must be in (0, 1], got {self.anneal_fraction}"
            )


def reward_weight(
    episode_index: int, schedule: RewardSchedule, total_episodes: int
) -> float:
    """Shaping weight c for a given episode."""
    if episode_index < 0:
        raise ValueError(f"episode_index must be >= 0, got {episode_index}")
    horizon = schedule.anneal_fraction * total_episodes
    if horizon <= 0 or episode_index >= horizon:
        return schedule.c_end
    frac = episode_index / horizon
    return schedule.c_start + frac * (schedule.c_end - schedule.c_start)


@dataclass(frozen=True)
class EnvConfig:
    spec: BatterySpec
    tau: float = 5.6
    k_steps: int = 28
    lambda_min: float = -0.3
    lambda_max: float = 0.3
    regime: str = "FullState"
    reward_schedule: RewardSchedule = field(default_factory=RewardSchedule)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(
                f"unknown regime {self.regime!r}; choose from {REGIMES}"
            )
        if self.k_steps < 1 or self.tau <= 0:
            raise ValueError("need tau > 0 and k_steps >= 1")
        if not self.lambda_min < self.lambda_max:
            raise ValueError("need lambda_min < lambda_max")

    @property
    def dt(self) -> float:
        return self.tau / self.k_steps

    @property
    def feature_dim(self) -> int:
        n = self.spec.n_tls
        if self.regime == "FullState":
            return 2 * self.spec.dim
        dim = n
        if self.regime in ("EnergiesFirstOrder", "EnergiesFirstSecondOrder"):
            dim += 3 * n
        if self.regime == "EnergiesFirstSecondOrder":
            dim += 9 * (n * (n - 1) // 2)
        return dim

    @property
    def observation_dim(self) -> int:
        """Feature length plus the appended last-action and time scalars."""
        return self.feature_dim + 2


@dataclass(frozen=True)
class Observation:
    features: np.ndarray
    last_action: float
    time_frac: float

    def vector(self) -> np.ndarray:
        return np.concatenate([self.features, [self.last_action, self.time_frac]])


@dataclass(frozen=True)
class StepInfo:
    energy: float
    ergotropy: float
    raw_ergotropy_gain: float


@dataclass(frozen=True)
class StepResult:
    obs: Observation
    reward: float
    done: bool
    info: StepInfo


class ChargingEnv:
    """Stateful single-rollout environment (one instance per rollout thread)."""

    def __init__(self, config: EnvConfig, total_episodes: int = 1):
        self.config = config
        self.total_episodes = total_episodes
        self.split = build_system(config.spec)
        self._sector = ParitySector.for_initial_state(config.spec, self.split)
        self._diag_hb = np.diag(self.split.hb_battery).copy()
        self._levels = battery_spectrum(config.spec).energies
        self._pairs = [
            (i, j)
            for i in range(config.spec.n_tls)
            for j in range(i + 1, config.spec.n_tls)
        ]
        # transposed operators so <M> = Re sum(rho * M^T) is one elementwise pass
        self._pauli_1t = [PAULI[a].T.copy() for a in AXES]
        self._pauli_2t = [
            numerics.kron(PAULI[a], PAULI[b]).T.copy() for a in AXES for b in AXES
        ]
        self._state: JointState | None = None
        self._phi: np.ndarray | None = None  # parity-sector amplitudes
        self._k = 0
        self._last_action = 0.0
        self._done = True
        self._energy = 0.0
        self._ergotropy = 0.0
        self._c = 0.0

    def reset(self, episode_index: int = 0) -> Observation:
        self._state = initial_state(self.config.spec)
        self._phi = self._sector.project(self._state.psi)
        self._k = 0
        self._last_action = 0.0
        self._done = False
        self._energy, self._ergotropy = self._measure()
        self._c = reward_weight(
            episode_index, self.config.reward_schedule, self.total_episodes
        )
        return self.observe()

    def _measure(self) -> tuple[float, float]:
        spec = self.config.spec
        m = self._state.psi.reshape(spec.battery_dim, spec.cavity_dim)
        rho = m @ m.conj().T
        energy = float(np.real(np.diag(rho)) @ self._diag_hb)
        eigs = np.clip(np.linalg.eigvalsh(rho)[::-1], 0.0, None)
        return energy, energy - passive_energy(eigs, self._levels)

    def observe(self) -> Observation:
        cfg = self.config
        spec = cfg.spec
        state = self._state
        if cfg.regime == "FullState":
            features = np.empty(2 * spec.dim)
            features[0::2] = state.psi.real
            features[1::2] = state.psi.imag
        else:
            site_rhos = [reduced_site(state.psi, spec, j) for j in range(spec.n_tls)]
            sz = np.array([np.sum(r * self._pauli_1t[2]).real for r in site_rhos])
            omegas = np.asarray(spec.frequencies)
            parts = [0.5 * omegas * (sz + 1.0)]
            if cfg.regime in ("EnergiesFirstOrder", "EnergiesFirstSecondOrder"):
                for pt in self._pauli_1t[:2]:
                    parts.append(
                        np.array([np.sum(r * pt).real for r in site_rhos])
                    )
                parts.append(sz)
            if cfg.regime == "EnergiesFirstSecondOrder":
                corr = []
                for (i, j) in self._pairs:
                    rho2 = reduced_pair(state.psi, spec, i, j)
                    corr.extend(np.sum(rho2 * pt).real for pt in self._pauli_2t)
                parts.append(np.array(corr))
            features = np.concatenate(parts)
        return Observation(
            features=features,
            last_action=self._last_action,
            time_frac=state.time / cfg.tau,
        )

    def step(self, action: float) -> StepResult:
        cfg = self.config
        if self._done:
            raise EpisodeFinishedError("episode is over; call reset()")
        action = float(action)
        if not cfg.lambda_min <= action <= cfg.lambda_max:
            raise ActionOutOfBoundsError(
                f"action {action} outside [{cfg.lambda_min}, {cfg.lambda_max}]"
            )
        self._phi = self._sector.evolve(self._phi, action, cfg.dt)
        self._state = JointState(
            psi=self._sector.embed(self._phi),
            time=self._state.time + cfg.dt,
        )
        self._k += 1
        self._last_action = action
        prev_e, prev_w = self._energy, self._ergotropy
        self._energy, self._ergotropy = self._measure()
        d_energy = self._energy - prev_e
        d_erg = self._ergotropy - prev_w
        reward = self._c * d_energy + (1.0 - self._c) * d_erg
        self._done = self._k == cfg.k_steps
        return StepResult(
            obs=self.observe(),
            reward=reward,
            done=self._done,
            info=StepInfo(
                energy=self._energy,
                ergotropy=self._ergotropy,
                raw_ergotropy_gain=d_erg,
            ),
        )

    @property
    def state(self) -> JointState:
        return self._state

    def truncation_leakage(self) -> float:
        return check_truncation(self._state, self.config.spec)
