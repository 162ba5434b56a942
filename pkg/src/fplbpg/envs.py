"""Multi-fulfillment environments: vector rewards in [0,1]^n per objective.

Two built-ins: a pendulum swing-up task with (angle, actuation) fulfillments
and a wrapper around the competitive toy dynamics for end-to-end smoke
tests.  An environment bundle directory (spec.fpl + env.cfg) reconfigures
constants and the bundled formula without code changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import parse_keyvalue

PENDULUM_SPEC_TEXT = "f_angle^2 &{-1} f_actuation"
TOY_SPEC_TEXT = "f0 &{-1} f1"


@dataclass(frozen=True)
class EnvSpec:
    name: str
    observation_dim: int
    action_dim: int
    action_low: tuple[float, ...]
    action_high: tuple[float, ...]
    objective_names: tuple[str, ...]
    max_episode_steps: int
    bundled_fpl: str


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: np.ndarray
    terminated: bool
    truncated: bool


class PendulumEnv:
    """Torque-actuated rigid pendulum; theta = 0 is upright.

    Dynamics: theta'' = (3g / 2l) sin(theta) + (3 / m l^2) tau, integrated
    with semi-implicit Euler at dt, speed clipped to +-max_speed, angle
    wrapped to (-pi, pi].  Rewards: f_angle = (1 + cos theta)/2 and
    f_actuation = 1 - |tau| / max_torque.  Episodes truncate at the horizon
    and never terminate.
    """

    def __init__(
        self,
        gravity: float = 10.0,
        mass: float = 1.0,
        length: float = 1.0,
        dt: float = 0.05,
        max_torque: float = 2.0,
        max_speed: float = 8.0,
        horizon: int = 200,
        bundled_fpl: str = PENDULUM_SPEC_TEXT,
    ):
        self.gravity = gravity
        self.mass = mass
        self.length = length
        self.dt = dt
        self.max_torque = max_torque
        self.max_speed = max_speed
        self.horizon = horizon
        self.spec = EnvSpec(
            name="pendulum",
            observation_dim=3,
            action_dim=1,
            action_low=(-max_torque,),
            action_high=(max_torque,),
            objective_names=("f_angle", "f_actuation"),
            max_episode_steps=horizon,
            bundled_fpl=bundled_fpl,
        )
        self._rng = np.random.default_rng()
        self.theta = 0.0
        self.theta_dot = 0.0
        self._steps = 0

    def _observe(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta), self.theta_dot])

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self.theta = float(self._rng.uniform(-math.pi, math.pi))
        self.theta_dot = float(self._rng.uniform(-1.0, 1.0))
        self._steps = 0
        return self._observe()

    def step(self, action) -> StepResult:
        action = np.asarray(action, dtype=float).reshape(-1)
        if action.shape != (1,):
            raise ValueError(f"pendulum actions have dimension 1, got {action.shape}")
        tau = float(np.clip(action[0], -self.max_torque, self.max_torque))
        g, m, length = self.gravity, self.mass, self.length
        accel = 3.0 * g / (2.0 * length) * math.sin(self.theta) + 3.0 / (
            m * length**2
        ) * tau
        self.theta_dot = float(
            np.clip(self.theta_dot + accel * self.dt, -self.max_speed, self.max_speed)
        )
        self.theta = _wrap_angle(self.theta + self.theta_dot * self.dt)
        self._steps += 1
        f_angle = (1.0 + math.cos(self.theta)) / 2.0
        f_actuation = 1.0 - abs(tau) / self.max_torque
        return StepResult(
            observation=self._observe(),
            reward=np.array([f_angle, f_actuation]),
            terminated=False,
            truncated=self._steps >= self.horizon,
        )

    def mechanical_energy(self) -> float:
        """Kinetic plus potential energy of the rod (zero at the pivot)."""
        inertia = self.mass * self.length**2 / 3.0
        kinetic = 0.5 * inertia * self.theta_dot**2
        potential = (
            self.mass * self.gravity * (self.length / 2.0) * math.cos(self.theta)
        )
        return kinetic + potential


def _wrap_angle(theta: float) -> float:
    wrapped = (theta + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if wrapped == -math.pi else wrapped


class ToyEnv:
    """The competitive toy system as a 2-action MF-MDP.

    State is the base pair (b0, b1); actions are increments scaled by
    move_scale and clipped to the unit box; rewards are the two competing
    fulfillments.
    """

    def __init__(
        self,
        alpha: float = 0.55,
        move_scale: float = 0.05,
        horizon: int = 50,
        bundled_fpl: str = TOY_SPEC_TEXT,
    ):
        self.alpha = alpha
        self.move_scale = move_scale
        self.horizon = horizon
        self.spec = EnvSpec(
            name="toy",
            observation_dim=2,
            action_dim=2,
            action_low=(-1.0, -1.0),
            action_high=(1.0, 1.0),
            objective_names=("f0", "f1"),
            max_episode_steps=horizon,
            bundled_fpl=bundled_fpl,
        )
        self._rng = np.random.default_rng()
        self.b = np.array([0.5, 0.5])
        self._steps = 0

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self.b = self._rng.uniform(0.0, 1.0, size=2)
        self._steps = 0
        return self.b.copy()

    def step(self, action) -> StepResult:
        action = np.asarray(action, dtype=float).reshape(-1)
        if action.shape != (2,):
            raise ValueError(f"toy actions have dimension 2, got {action.shape}")
        move = np.clip(action, -1.0, 1.0) * self.move_scale
        self.b = np.clip(self.b + move, 0.0, 1.0)
        self._steps += 1
        f0 = self.b[0] * (1.0 - self.alpha * self.b[1])
        f1 = self.b[1] * (1.0 - self.alpha * self.b[0])
        return StepResult(
            observation=self.b.copy(),
            reward=np.array([f0, f1]),
            terminated=False,
            truncated=self._steps >= self.horizon,
        )


_BUILDERS = {"pendulum": PendulumEnv, "toy": ToyEnv}


def make_env(name: str, **overrides):
    """Instantiate a built-in environment by name."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(
            f"unknown environment {name!r}; choose from {sorted(_BUILDERS)}"
        ) from None
    return builder(**overrides)


def load_env_bundle(path):
    """Environment from a bundle directory holding env.cfg and spec.fpl.

    env.cfg is key=value with an `env` key naming the builder; remaining
    keys are constructor overrides.  spec.fpl replaces the bundled formula.
    """
    path = Path(path)
    pairs = parse_keyvalue((path / "env.cfg").read_text(encoding="utf-8"))
    name = pairs.pop("env", None)
    if name is None:
        raise ValueError(f"{path / 'env.cfg'}: missing the 'env' key")
    overrides: dict = {}
    for key, value in pairs.items():
        if key == "horizon":
            overrides[key] = int(value)
        else:
            overrides[key] = float(value)
    spec_path = path / "spec.fpl"
    if spec_path.exists():
        overrides["bundled_fpl"] = spec_path.read_text(encoding="utf-8")
    env = make_env(name, **overrides)
    return env
