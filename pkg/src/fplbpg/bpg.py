"""Actor-critic training against a priority-formula utility.

The critic estimates one normalized value per objective (a vector in
(0,1)^n); the actor ascends the p=2 batch mean of the utility of those
estimates.  Two ingredients keep the estimates honest: targets are formed
as (1-gamma)*r + gamma*next-value so they stay inside [0,1], and every
transition carries the discounted tail return actually observed in its
episode (fv_obs), regressed against with weight alpha_fv to counteract
overestimation.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .config import BpgConfig
from .envs import StepResult
from .lang import UtilitySpec, evaluate, evaluate_many, gradient_many, load_spec_text
from .nets import (
    BOUNDED,
    LOGISTIC,
    Adam,
    Mlp,
    TargetPair,
    clip_gradients,
    perturb_params,
    polyak_update,
)


class TrainingDiverged(RuntimeError):
    """A loss or objective became NaN; carries the diagnostic dump."""


def compute_fv_obs(rewards: np.ndarray, gamma: float, truncated: bool) -> np.ndarray:
    """Per-step observed fulfillment values of one finished episode.

    fv_t = (1-gamma) * sum_{k>=t} gamma^(k-t) r_k, with the tail beyond a
    truncation boundary continued at the final observed reward (a constant
    continuation keeps the target observable without touching the critic).
    Terminated episodes have no continuation term.  One backward pass.
    """
    rewards = np.asarray(rewards, dtype=float)
    if rewards.ndim != 2 or rewards.shape[0] == 0:
        raise ValueError("rewards must be a non-empty (steps, objectives) array")
    out = np.empty_like(rewards)
    tail = rewards[-1].copy() if truncated else np.zeros(rewards.shape[1])
    for t in range(rewards.shape[0] - 1, -1, -1):
        tail = (1.0 - gamma) * rewards[t] + gamma * tail
        out[t] = tail
    return np.clip(out, 0.0, 1.0)


def td_targets(
    reward: np.ndarray, next_values: np.ndarray, terminated: np.ndarray, gamma: float
) -> np.ndarray:
    """y = (1-gamma)*r + gamma*next_values, bootstrap dropped when terminated."""
    cont = 1.0 - np.asarray(terminated, dtype=float)[:, None]
    return (1.0 - gamma) * reward + gamma * next_values * cont


def residual_rms(residuals: np.ndarray) -> float:
    """p=2 power mean of the flattened residual magnitudes."""
    residuals = np.asarray(residuals, dtype=float)
    return float(np.sqrt(np.mean(residuals**2)))


def critic_losses(
    batch: dict, critic: Mlp, critic_target: Mlp, actor_target: Mlp, gamma: float
) -> tuple[float, float]:
    """(l_td, l_fv): RMS of the TD and observed-return residuals.

    The combined critic gradient descends l_td + alpha_fv * l_fv; this
    measurement-only form backs probes and tests.
    """
    next_act, _ = actor_target.forward(batch["next_obs"])
    next_q, _ = critic_target.forward(
        np.concatenate([batch["next_obs"], next_act], axis=1)
    )
    y = td_targets(batch["rew"], next_q, batch["terminated"], gamma)
    fq, _ = critic.forward(np.concatenate([batch["obs"], batch["act"]], axis=1))
    return residual_rms(y - fq), residual_rms(batch["fv_obs"] - fq)


def actor_objective(states: np.ndarray, actor: Mlp, critic: Mlp, spec: UtilitySpec) -> float:
    """J: p=2 batch mean of the utility of the critic's estimates at pi(s)."""
    if critic.layer_sizes[-1] != len(spec.objective_order):
        raise ValueError(
            f"critic emits {critic.layer_sizes[-1]} objectives but the spec "
            f"orders {len(spec.objective_order)}"
        )
    actions, _ = actor.forward(states)
    fq, _ = critic.forward(np.concatenate([states, actions], axis=1))
    return residual_rms(evaluate_many(spec, fq.T))


class ReplayBuffer:
    """Ring buffer admitting transitions only after their episode closes.

    Steps accumulate in a pending list; closing the episode computes fv_obs
    for every step and moves them into the sampleable store, so a sampled
    transition always carries a finalized observed return.  With
    holdout_every > 0 every k-th admitted transition is diverted to a
    held-out ring (most recent holdout_cap entries) used for value-error
    probes, never for training; recency matters because observed returns of
    long-replaced policies say little about the current critic.
    """

    def __init__(
        self,
        capacity: int,
        obs_dim: int,
        act_dim: int,
        n_objectives: int,
        gamma: float,
        holdout_every: int = 0,
        holdout_cap: int = 4096,
    ):
        self.capacity = int(capacity)
        self.gamma = gamma
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros((capacity, n_objectives))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.terminated = np.zeros(capacity, dtype=bool)
        self.fv_obs = np.zeros((capacity, n_objectives))
        self.episode_id = np.zeros(capacity, dtype=np.int64)
        self.step_index = np.zeros(capacity, dtype=np.int64)
        self._size = 0
        self._write = 0
        self._episodes_closed = 0
        self._admitted = 0
        self.holdout_every = int(holdout_every)
        self._holdout: deque = deque(maxlen=int(holdout_cap))
        self._pending: list[tuple] = []

    def __len__(self) -> int:
        return self._size

    @property
    def episodes_closed(self) -> int:
        return self._episodes_closed

    def add_step(self, obs, act, result: StepResult) -> None:
        self._pending.append(
            (
                np.asarray(obs, dtype=float),
                np.asarray(act, dtype=float),
                result.reward.astype(float),
                result.observation.astype(float),
                result.terminated,
            )
        )
        if result.terminated or result.truncated:
            self._close_episode(result.truncated)

    def _close_episode(self, truncated: bool) -> None:
        rewards = np.stack([p[2] for p in self._pending])
        fv = compute_fv_obs(rewards, self.gamma, truncated)
        episode = self._episodes_closed
        for t, (obs, act, rew, nxt, term) in enumerate(self._pending):
            self._admitted += 1
            if self.holdout_every and self._admitted % self.holdout_every == 0:
                self._holdout.append((obs, act, fv[t]))
                continue
            w = self._write
            self.obs[w] = obs
            self.act[w] = act
            self.rew[w] = rew
            self.next_obs[w] = nxt
            self.terminated[w] = term
            self.fv_obs[w] = fv[t]
            self.episode_id[w] = episode
            self.step_index[w] = t
            self._write = (w + 1) % self.capacity
            self._size = min(self._size + 1, self.capacity)
        self._pending.clear()
        self._episodes_closed += 1

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(self._size, size=batch_size)
        return {
            "obs": self.obs[idx],
            "act": self.act[idx],
            "rew": self.rew[idx],
            "next_obs": self.next_obs[idx],
            "terminated": self.terminated[idx],
            "fv_obs": self.fv_obs[idx],
        }

    def holdout_arrays(self):
        if not self._holdout:
            return None
        obs = np.stack([h[0] for h in self._holdout])
        act = np.stack([h[1] for h in self._holdout])
        fv = np.stack([h[2] for h in self._holdout])
        return obs, act, fv


@dataclass
class LearningCurveRow:
    episode: int
    env_steps: int
    objective_means: tuple[float, ...]
    mean_utility: float
    l_td: float | None
    l_fv: float | None
    mean_abs_fq_err: float | None


@dataclass
class TrainReport:
    rows: list[LearningCurveRow]
    env_steps: int
    episodes: int
    objective_names: tuple[str, ...]
    evals: list[tuple[int, "EvalReport"]] = field(default_factory=list)


@dataclass
class EvalReport:
    objective_means: tuple[float, ...]
    tail_means: tuple[float, ...]  # over the final 100 steps of each episode
    mean_utility: float
    fv_summaries: list[np.ndarray]  # discounted fulfillment per episode
    reward_traces: list[np.ndarray] = field(repr=False, default_factory=list)


def resolve_utility_spec(config: BpgConfig, env) -> UtilitySpec:
    """Spec from config (object or file) or the environment bundle.

    The objective order is forced to the environment's layout; formulas are
    invariant to it, the order only fixes the vector interpretation.
    """
    if config.utility_spec is not None:
        spec = config.utility_spec
    elif config.spec_file:
        with open(config.spec_file, encoding="utf-8") as fh:
            spec = load_spec_text(fh.read())
    else:
        spec = load_spec_text(env.spec.bundled_fpl)
    names = env.spec.objective_names
    if set(spec.objective_order) != set(names):
        raise ValueError(
            f"spec objectives {sorted(spec.objective_order)} do not match "
            f"environment objectives {sorted(names)}"
        )
    if spec.objective_order != names:
        spec = UtilitySpec(spec.formula, names)
    return spec


class BpgTrainer:
    """One training run on one environment, deterministic given the seed."""

    HIDDEN = (64, 64)

    def __init__(self, env, config: BpgConfig, holdout_every: int = 0):
        self.env = env
        self.config = config
        self.spec = resolve_utility_spec(config, env)
        espec = env.spec
        seeds = np.random.SeedSequence(config.seed).spawn(5)
        self.actor = TargetPair.create(
            Mlp(
                (espec.observation_dim, *self.HIDDEN, espec.action_dim),
                BOUNDED,
                out_low=espec.action_low,
                out_high=espec.action_high,
                rng=np.random.default_rng(seeds[0]),
            )
        )
        n_obj = len(espec.objective_names)
        self.critic = TargetPair.create(
            Mlp(
                (espec.observation_dim + espec.action_dim, *self.HIDDEN, n_obj),
                LOGISTIC,
                rng=np.random.default_rng(seeds[1]),
            )
        )
        self.noise_rng = np.random.default_rng(seeds[2])
        self.sample_rng = np.random.default_rng(seeds[3])
        self.env_seed_rng = np.random.default_rng(seeds[4])
        self.buffer = ReplayBuffer(
            config.buffer_capacity,
            espec.observation_dim,
            espec.action_dim,
            n_obj,
            config.gamma,
            holdout_every=holdout_every,
        )
        self.critic_opt = Adam(self.critic.online, config.critic_lr)
        self.actor_opt = Adam(self.actor.online, config.actor_lr)
        self.j_prev = config.j_floor
        self.env_steps = 0
        self.updates = 0

    # -- collection ------------------------------------------------------

    def _noise_scale(self) -> float:
        if self.config.noise_mode == "complement":
            return 1.0 - self.j_prev
        return self.j_prev

    def collect_episode(self) -> tuple[np.ndarray, int]:
        """Run one episode with per-step parameter noise; returns (rewards, steps)."""
        obs = self.env.reset(seed=int(self.env_seed_rng.integers(2**63)))
        rewards = []
        while True:
            noisy = perturb_params(
                self.actor.online, self.config.sigma, self._noise_scale(), self.noise_rng
            )
            action, _ = noisy.forward(obs)
            result = self.env.step(action)
            self.buffer.add_step(obs, action, result)
            rewards.append(result.reward)
            obs = result.observation
            self.env_steps += 1
            if result.terminated or result.truncated:
                break
        rewards = np.stack(rewards)
        utilities = evaluate_many(self.spec, rewards.T)
        self.j_prev = float(min(max(np.mean(utilities), self.config.j_floor), 1.0))
        return rewards, len(rewards)

    # -- updates ---------------------------------------------------------

    def train_iteration(self) -> tuple[float, float, float]:
        """One critic + actor update; returns (l_td, l_fv, batch mean |fq - fv|)."""
        cfg = self.config
        batch = self.buffer.sample(cfg.batch_size, self.sample_rng)

        next_act, _ = self.actor.target.forward(batch["next_obs"])
        next_q, _ = self.critic.target.forward(
            np.concatenate([batch["next_obs"], next_act], axis=1)
        )
        y = td_targets(batch["rew"], next_q, batch["terminated"], cfg.gamma)
        assert ((y >= 0.0) & (y <= 1.0)).all(), "TD target left [0,1]"

        sa = np.concatenate([batch["obs"], batch["act"]], axis=1)
        fq, cache = self.critic.online.forward(sa)
        e_td = y - fq
        e_fv = batch["fv_obs"] - fq
        l_td = residual_rms(e_td)
        l_fv = residual_rms(e_fv)
        if math.isnan(l_td) or math.isnan(l_fv):
            raise TrainingDiverged(self._dump("critic loss", l_td=l_td, l_fv=l_fv))
        n_el = e_td.size
        dloss_dfq = np.zeros_like(fq)
        if l_td > 0.0:
            dloss_dfq -= e_td / (n_el * l_td)
        if l_fv > 0.0:
            dloss_dfq -= cfg.alpha_fv * e_fv / (n_el * l_fv)
        grads, _ = self.critic.online.backward(cache, dloss_dfq)
        self.critic_opt.step(clip_gradients(grads))

        actions, actor_cache = self.actor.online.forward(batch["obs"])
        sa_pi = np.concatenate([batch["obs"], actions], axis=1)
        fq_pi, critic_cache = self.critic.online.forward(sa_pi)
        utilities = evaluate_many(self.spec, fq_pi.T)
        j = residual_rms(utilities)
        if math.isnan(j):
            raise TrainingDiverged(self._dump("actor objective", J=j))
        if j > 0.0:
            dj_du = utilities / (utilities.size * j)
            du_dfq = gradient_many(self.spec, fq_pi.T)  # (n_obj, B)
            dj_dfq = (du_dfq * dj_du).T
            _, input_grad = self.critic.online.backward(critic_cache, dj_dfq)
            dj_da = input_grad[:, batch["obs"].shape[1]:]
            agrads, _ = self.actor.online.backward(actor_cache, -dj_da)
            self.actor_opt.step(clip_gradients(agrads))

        polyak_update(self.actor, cfg.tau)
        polyak_update(self.critic, cfg.tau)
        self.updates += 1
        return l_td, l_fv, float(np.mean(np.abs(e_fv)))

    def _dump(self, what: str, **values) -> str:
        lines = [
            f"NaN in {what}",
            f"  env_steps={self.env_steps} updates={self.updates} "
            f"episodes={self.buffer.episodes_closed} j_prev={self.j_prev}",
        ]
        lines += [f"  {k}={v}" for k, v in values.items()]
        for name, pair in (("actor", self.actor), ("critic", self.critic)):
            flat = np.concatenate([w.ravel() for w in pair.online.weights])
            lines.append(
                f"  {name}: |w|_max={np.max(np.abs(flat)):.4g} "
                f"nan_params={int(np.isnan(flat).sum())}"
            )
        return "\n".join(lines)

    # -- the loop --------------------------------------------------------

    def run(
        self,
        eval_every: int = 0,
        eval_episodes: int = 5,
        stop_when=None,
    ) -> TrainReport:
        """Collect/finalize/update until the step budget; optionally evaluate
        the noise-free policy every eval_every env steps.  stop_when, given
        an EvalReport, may end the run early (reach-time experiments)."""
        cfg = self.config
        rows: list[LearningCurveRow] = []
        evals: list[tuple[int, EvalReport]] = []
        episode = 0
        next_eval = eval_every
        while self.env_steps < cfg.total_env_steps:
            rewards, steps = self.collect_episode()
            iters = cfg.train_iters_per_episode or steps
            l_td = l_fv = fq_err = None
            if len(self.buffer) >= cfg.batch_size:
                for _ in range(iters):
                    l_td, l_fv, fq_err = self.train_iteration()
            mean_rewards = rewards.mean(axis=0)
            rows.append(
                LearningCurveRow(
                    episode=episode,
                    env_steps=self.env_steps,
                    objective_means=tuple(float(v) for v in mean_rewards),
                    mean_utility=float(
                        np.mean(evaluate_many(self.spec, rewards.T))
                    ),
                    l_td=l_td,
                    l_fv=l_fv,
                    mean_abs_fq_err=fq_err,
                )
            )
            episode += 1
            if eval_every and self.env_steps >= next_eval:
                report = self.evaluate(eval_episodes)
                evals.append((self.env_steps, report))
                next_eval += eval_every
                if stop_when is not None and stop_when(report):
                    break
        if eval_every and (not evals or evals[-1][0] < self.env_steps):
            evals.append((self.env_steps, self.evaluate(eval_episodes)))
        return TrainReport(
            rows=rows,
            env_steps=self.env_steps,
            episodes=episode,
            objective_names=self.env.spec.objective_names,
            evals=evals,
        )

    def evaluate(self, episodes: int = 5) -> "EvalReport":
        """Noise-free evaluation; uses a seed derived from the run seed so
        interleaved evaluations never disturb the training trajectory."""
        return evaluate_policy(
            self.env,
            self.actor.online,
            self.spec,
            episodes=episodes,
            seed=self.config.seed + 977,
            gamma=self.config.gamma,
        )


def write_learning_curve(report: TrainReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["episode", "env_steps"]
        header += [f"mean_{name}" for name in report.objective_names]
        header += ["mean_utility", "l_td", "l_fv", "mean_abs_fq_err"]
        writer.writerow(header)
        for r in report.rows:
            row = [r.episode, r.env_steps]
            row += [format(v, ".12g") for v in r.objective_means]
            row.append(format(r.mean_utility, ".12g"))
            for v in (r.l_td, r.l_fv, r.mean_abs_fq_err):
                row.append("" if v is None else format(v, ".12g"))
            writer.writerow(row)


def evaluate_policy(
    env, actor: Mlp, spec: UtilitySpec, episodes: int = 5, seed: int = 0,
    gamma: float = 0.98,
) -> EvalReport:
    """Noise-free rollouts; time-averaged fulfillments and their utility."""
    rng = np.random.default_rng(seed)
    traces = []
    fv_summaries = []
    for _ in range(episodes):
        obs = env.reset(seed=int(rng.integers(2**63)))
        rewards = []
        while True:
            action, _ = actor.forward(obs)
            result = env.step(action)
            rewards.append(result.reward)
            obs = result.observation
            if result.terminated or result.truncated:
                break
        rewards = np.stack(rewards)
        traces.append(rewards)
        fv_summaries.append(
            compute_fv_obs(rewards, gamma, truncated=True)[0]
        )
    all_rewards = np.concatenate(traces, axis=0)
    objective_means = tuple(float(v) for v in all_rewards.mean(axis=0))
    tails = np.stack([t[-100:].mean(axis=0) for t in traces])
    mean_utility = evaluate(
        spec, dict(zip(spec.objective_order, objective_means))
    )
    return EvalReport(
        objective_means=objective_means,
        tail_means=tuple(float(v) for v in tails.mean(axis=0)),
        mean_utility=float(mean_utility),
        fv_summaries=fv_summaries,
        reward_traces=traces,
    )


def q_error_probe(
    env_factory, config_on: BpgConfig, config_off: BpgConfig, holdout_every: int = 20
) -> tuple[float, float]:
    """Held-out |FQ - fv_obs| after training with and without the fv loss.

    The two configurations must be identical except for alpha_fv.  Returns
    (error with fv loss, error without).
    """
    if replace(config_on, alpha_fv=0.0) != replace(config_off, alpha_fv=0.0):
        raise ValueError("probe configs may differ only in alpha_fv")

    def final_error(config: BpgConfig) -> float:
        trainer = BpgTrainer(env_factory(), config, holdout_every=holdout_every)
        trainer.run()
        held = trainer.buffer.holdout_arrays()
        if held is None:
            raise ValueError("no held-out transitions; run longer or lower holdout_every")
        obs, act, fv = held
        fq, _ = trainer.critic.online.forward(np.concatenate([obs, act], axis=1))
        return float(np.mean(np.abs(fq - fv)))

    return final_error(config_on), final_error(config_off)
