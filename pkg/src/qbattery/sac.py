"""Soft Actor-Critic over the in-repo MLP machinery.

Squashed-Gaussian actor, twin critics with Polyak-averaged targets, and an
adaptive temperature parameterized through log(alpha). All loss gradients
are hand-derived; finite-difference tests pin them down.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .nn import MLP, Adam, NonFiniteGradientError, get_flat, polyak_update, set_flat

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class SACConfig:
    gamma: float = 0.99
    polyak_rho: float = 0.995
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4
    lr_temp: float = 3e-4
    batch_size: int = 256
    buffer_capacity: int = 100_000
    warmup_steps: int = 1000
    updates_per_step: int = 1
    target_entropy: float = -1.0
    log_std_bounds: tuple[float, float] = (-20.0, 2.0)
    hidden_sizes: tuple[int, ...] = (256, 256)
    initial_alpha: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 < self.polyak_rho < 1.0:
            raise ValueError(f"polyak_rho must be in (0, 1), got {self.polyak_rho}")

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "polyak_rho": self.polyak_rho,
            "lr_actor": self.lr_actor,
            "lr_critic": self.lr_critic,
            "lr_temp": self.lr_temp,
            "batch_size": self.batch_size,
            "buffer_capacity": self.buffer_capacity,
            "warmup_steps": self.warmup_steps,
            "updates_per_step": self.updates_per_step,
            "target_entropy": self.target_entropy,
            "log_std_bounds": tuple(self.log_std_bounds),
            "hidden_sizes": tuple(self.hidden_sizes),
            "initial_alpha": self.initial_alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SACConfig":
        d = dict(d)
        if "log_std_bounds" in d:
            d["log_std_bounds"] = tuple(d["log_std_bounds"])
        if "hidden_sizes" in d:
            d["hidden_sizes"] = tuple(d["hidden_sizes"])
        return cls(**d)


class ReplayBuffer:
    """Preallocated ring buffer of one-step transitions."""

    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, 1))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity)
        self.pos = 0
        self.size = 0

    def push(self, obs, action, reward, next_obs, done) -> None:
        i = self.pos
        self.obs[i] = obs
        self.actions[i, 0] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self.pos = (self.pos + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return {
            "obs": self.obs[idx],
            "action": self.actions[idx],
            "reward": self.rewards[idx],
            "next_obs": self.next_obs[idx],
            "done": self.dones[idx],
        }

    def __len__(self) -> int:
        return self.size


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


class SACAgent:
    """Scalar-action SAC agent; shapes stay (batch, 1) for generality."""

    def __init__(
        self,
        obs_dim: int,
        action_low: float,
        action_high: float,
        config: SACConfig,
        rng: np.random.Generator,
    ):
        self.obs_dim = obs_dim
        self.low = float(action_low)
        self.high = float(action_high)
        self.scale = 0.5 * (self.high - self.low)
        self.mid = 0.5 * (self.high + self.low)
        self.config = config
        hid = list(config.hidden_sizes)
        self.actor = MLP([obs_dim, *hid, 2], rng)
        self.q1 = MLP([obs_dim + 1, *hid, 1], rng)
        self.q2 = MLP([obs_dim + 1, *hid, 1], rng)
        self.q1_targ = MLP([obs_dim + 1, *hid, 1], rng)
        self.q2_targ = MLP([obs_dim + 1, *hid, 1], rng)
        self.q1_targ.copy_from(self.q1)
        self.q2_targ.copy_from(self.q2)
        self.log_alpha = float(np.log(config.initial_alpha))
        self.opt_actor = Adam(self.actor.parameters(), config.lr_actor)
        self.opt_q1 = Adam(self.q1.parameters(), config.lr_critic)
        self.opt_q2 = Adam(self.q2.parameters(), config.lr_critic)
        # scalar Adam state for log_alpha
        self._alpha_m = 0.0
        self._alpha_v = 0.0
        self._alpha_t = 0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha))

    # ---- policy ----------------------------------------------------------

    def policy(self, obs: np.ndarray, noise: np.ndarray):
        """Squashed-Gaussian actions and log-probabilities for fixed noise.

        Returns (action, log_prob, aux) where aux carries the intermediates
        needed to push gradients back through the sample.
        """
        out, cache = self.actor.forward(obs)
        lo, hi = self.config.log_std_bounds
        mu = out[:, 0:1]
        log_std_raw = out[:, 1:2]
        log_std = np.clip(log_std_raw, lo, hi)
        std = np.exp(log_std)
        atilde = mu + std * noise
        # tanh reaches exactly +-1 in float64 beyond |atilde| ~ 19; keep the
        # action strictly inside the open interval
        u = np.clip(np.tanh(atilde), -1.0 + 1e-9, 1.0 - 1e-9)
        a = self.scale * u + self.mid
        # log N(atilde; mu, std) - log |da/datilde|, with the stable form
        # log(1 - u^2) = 2 (log 2 - atilde - softplus(-2 atilde)).
        log_jac = np.log(self.scale) + 2.0 * (
            np.log(2.0) - atilde - _softplus(-2.0 * atilde)
        )
        log_prob = (-0.5 * noise**2 - log_std - 0.5 * LOG_2PI - log_jac)[:, 0]
        aux = {
            "cache": cache,
            "noise": noise,
            "u": u,
            "std": std,
            "clip_mask": (log_std_raw > lo) & (log_std_raw < hi),
        }
        return a, log_prob, aux

    def sample_action(self, obs_vec: np.ndarray, rng: np.random.Generator) -> tuple[float, float]:
        """One stochastic action for a single observation vector."""
        noise = rng.standard_normal((1, 1))
        a, logp, _ = self.policy(obs_vec[None, :], noise)
        return float(a[0, 0]), float(logp[0])

    def deterministic_action(self, obs_vec: np.ndarray) -> float:
        out = self.actor(obs_vec[None, :])
        u = np.clip(np.tanh(out[0, 0]), -1.0 + 1e-9, 1.0 - 1e-9)
        return float(self.scale * u + self.mid)

    def _policy_backward(self, aux, d_action: np.ndarray, d_logp: np.ndarray):
        """Actor parameter grads given d(loss)/d(action) and d(loss)/d(logp)."""
        u = aux["u"]
        one_m_u2 = 1.0 - u**2
        d_logp = d_logp[:, None]
        # d logp / d atilde = 2u ; d a / d atilde = scale (1 - u^2)
        d_atilde = d_action * self.scale * one_m_u2 + d_logp * 2.0 * u
        d_mu = d_atilde
        d_log_std = (d_atilde * aux["noise"] * aux["std"] - d_logp) * aux["clip_mask"]
        grad_out = np.concatenate([d_mu, d_log_std], axis=1)
        grads, _ = self.actor.backward(aux["cache"], grad_out)
        return grads

    # ---- losses and updates ---------------------------------------------

    def critic_targets(self, batch: dict, rng: np.random.Generator) -> np.ndarray:
        """Clipped double-Q targets; the bootstrap drops on done transitions."""
        next_obs = batch["next_obs"]
        noise = rng.standard_normal((next_obs.shape[0], 1))
        a2, logp2, _ = self.policy(next_obs, noise)
        x2 = np.concatenate([next_obs, a2], axis=1)
        qmin = np.minimum(self.q1_targ(x2)[:, 0], self.q2_targ(x2)[:, 0])
        not_done = 1.0 - batch["done"]
        return batch["reward"] + self.config.gamma * not_done * (
            qmin - self.alpha * logp2
        )

    def critic_loss_and_grads(self, batch: dict, targets: np.ndarray):
        """Per-critic mean-squared Bellman errors and their gradients.

        Returns ((mse1, mse2), grads1, grads2); each gradient list belongs to
        its own critic's loss, the critics do not share parameters.
        """
        x = np.concatenate([batch["obs"], batch["action"]], axis=1)
        n = x.shape[0]
        losses = []
        all_grads = []
        for q in (self.q1, self.q2):
            pred, cache = q.forward(x)
            err = pred[:, 0] - targets
            losses.append(float(np.mean(err**2)))
            grads, _ = q.backward(cache, (2.0 * err / n)[:, None])
            all_grads.append(grads)
        return (losses[0], losses[1]), all_grads[0], all_grads[1]

    def update_critics(self, batch: dict, targets: np.ndarray) -> float:
        losses, g1, g2 = self.critic_loss_and_grads(batch, targets)
        self.opt_q1.step(g1)
        self.opt_q2.step(g2)
        return 0.5 * (losses[0] + losses[1])

    def actor_loss_and_grads(self, batch: dict, noise: np.ndarray):
        """Reparameterized actor loss E[alpha logp - min Q] and its gradients."""
        obs = batch["obs"]
        n = obs.shape[0]
        a, logp, aux = self.policy(obs, noise)
        x = np.concatenate([obs, a], axis=1)
        p1, c1 = self.q1.forward(x)
        p2, c2 = self.q2.forward(x)
        q1v, q2v = p1[:, 0], p2[:, 0]
        qmin = np.minimum(q1v, q2v)
        loss = float(np.mean(self.alpha * logp - qmin))
        # d loss / d a comes only through the selected critic of the min.
        pick1 = (q1v <= q2v).astype(float)[:, None]
        d_q = -1.0 / n
        _, gin1 = self.q1.backward(c1, d_q * pick1)
        _, gin2 = self.q2.backward(c2, d_q * (1.0 - pick1))
        d_action = (gin1 + gin2)[:, -1:]
        d_logp = np.full(n, self.alpha / n)
        grads = self._policy_backward(aux, d_action, d_logp)
        return loss, grads, logp

    def update_actor(self, batch: dict, rng: np.random.Generator):
        noise = rng.standard_normal((batch["obs"].shape[0], 1))
        loss, grads, logp = self.actor_loss_and_grads(batch, noise)
        self.opt_actor.step(grads)
        return loss, logp

    def temperature_loss_and_grad(self, logp: np.ndarray):
        """L(alpha) = E[alpha (-logp - target_entropy)], grad wrt log_alpha."""
        drive = float(np.mean(-logp - self.config.target_entropy))
        loss = self.alpha * drive
        return loss, self.alpha * drive

    def update_temperature(self, logp: np.ndarray) -> float:
        _, g = self.temperature_loss_and_grad(logp)
        if not np.isfinite(g):
            raise NonFiniteGradientError("temperature gradient is not finite")
        c = self.config
        self._alpha_t += 1
        self._alpha_m = 0.9 * self._alpha_m + 0.1 * g
        self._alpha_v = 0.999 * self._alpha_v + 0.001 * g * g
        mhat = self._alpha_m / (1.0 - 0.9**self._alpha_t)
        vhat = self._alpha_v / (1.0 - 0.999**self._alpha_t)
        self.log_alpha -= c.lr_temp * mhat / (np.sqrt(vhat) + 1e-8)
        return self.alpha

    def polyak(self) -> None:
        rho = self.config.polyak_rho
        polyak_update(self.q1_targ, self.q1, rho)
        polyak_update(self.q2_targ, self.q2, rho)

    def update(self, batch: dict, rng: np.random.Generator) -> dict:
        """One full SAC update on a sampled batch."""
        targets = self.critic_targets(batch, rng)
        critic_loss = self.update_critics(batch, targets)
        actor_loss, logp = self.update_actor(batch, rng)
        alpha = self.update_temperature(logp)
        self.polyak()
        return {"critic_loss": critic_loss, "actor_loss": actor_loss, "alpha": alpha}

    # ---- checkpointing ---------------------------------------------------

    def save(self, path, extra: dict | None = None) -> None:
        """Versioned checkpoint; loading reproduces the next action bit-exactly."""
        arrays = {"format_version": np.array(1)}
        for name, net in self._nets().items():
            arrays[f"{name}_flat"] = get_flat(net.parameters())
        for name, opt in self._opts().items():
            for k, v in opt.state_arrays().items():
                arrays[f"{name}_{k}"] = v
        arrays["log_alpha"] = np.array(self.log_alpha)
        arrays["alpha_opt"] = np.array(
            [self._alpha_m, self._alpha_v, float(self._alpha_t)]
        )
        meta = {
            "obs_dim": self.obs_dim,
            "action_low": self.low,
            "action_high": self.high,
            "config": self.config.to_dict(),
            "extra": extra or {},
        }
        arrays["meta_json"] = np.frombuffer(
            json.dumps(meta).encode(), dtype=np.uint8
        )
        np.savez(path, **arrays)

    def _nets(self) -> dict[str, MLP]:
        return {
            "actor": self.actor,
            "q1": self.q1,
            "q2": self.q2,
            "q1_targ": self.q1_targ,
            "q2_targ": self.q2_targ,
        }

    def _opts(self) -> dict[str, Adam]:
        return {"opt_actor": self.opt_actor, "opt_q1": self.opt_q1, "opt_q2": self.opt_q2}

    @classmethod
    def load(cls, path) -> tuple["SACAgent", dict]:
        data = np.load(path)
        meta = json.loads(bytes(data["meta_json"]).decode())
        config = SACConfig.from_dict(meta["config"])
        agent = cls(
            meta["obs_dim"],
            meta["action_low"],
            meta["action_high"],
            config,
            np.random.default_rng(0),
        )
        for name, net in agent._nets().items():
            set_flat(net.parameters(), data[f"{name}_flat"])
        for name, opt in agent._opts().items():
            opt.load_state_arrays(
                {k: data[f"{name}_{k}"] for k in opt.state_arrays()}
            )
        agent.log_alpha = float(data["log_alpha"])
        m, v, t = data["alpha_opt"]
        agent._alpha_m, agent._alpha_v, agent._alpha_t = float(m), float(v), int(t)
        return agent, meta["extra"]
