"""Flat key=value configuration files and the training configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .lang import UtilitySpec


def parse_keyvalue(text: str) -> dict[str, str]:
    """`key = value` lines, UTF-8, `#` comments; later keys override earlier."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


@dataclass
class BpgConfig:
    """Hyperparameters of the training loop; defaults are the shipped ones."""

    env: str = "pendulum"
    spec_file: str = ""  # empty: use the environment's bundled formula
    gamma: float = 0.98
    alpha_fv: float = 0.75
    sigma: float = 0.05
    j_floor: float = 0.1
    batch_size: int = 128
    buffer_capacity: int = 100_000
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    tau: float = 0.005
    train_iters_per_episode: int = 0  # 0: one iteration per episode step
    total_env_steps: int = 50_000
    seed: int = 0
    noise_mode: str = "performance"  # or "complement": sigma * (1 - j_prev)
    utility_spec: UtilitySpec | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.alpha_fv < 0.0:
            raise ValueError("alpha_fv must be >= 0")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.noise_mode not in ("performance", "complement"):
            raise ValueError(f"unknown noise_mode {self.noise_mode!r}")


_INT_KEYS = {"batch_size", "buffer_capacity", "train_iters_per_episode",
             "total_env_steps", "seed"}
_FLOAT_KEYS = {"gamma", "alpha_fv", "sigma", "j_floor", "actor_lr",
               "critic_lr", "tau"}
_STR_KEYS = {"env", "spec_file", "noise_mode"}


def config_from_mapping(pairs: dict[str, str]) -> BpgConfig:
    kwargs: dict = {}
    for key, value in pairs.items():
        if key in _INT_KEYS:
            kwargs[key] = int(value)
        elif key in _FLOAT_KEYS:
            kwargs[key] = float(value)
        elif key in _STR_KEYS:
            kwargs[key] = value
        else:
            raise ValueError(f"unknown configuration key {key!r}")
    return BpgConfig(**kwargs)


def load_run_config(path) -> BpgConfig:
    path = Path(path)
    cfg = config_from_mapping(parse_keyvalue(path.read_text(encoding="utf-8")))
    if cfg.spec_file:
        # spec_file is relative to the config file's directory
        spec_path = Path(cfg.spec_file)
        if not spec_path.is_absolute():
            cfg.spec_file = str(path.parent / spec_path)
    return cfg


def config_digest(config: BpgConfig) -> str:
    """Stable short hash of the scalar configuration fields."""
    import hashlib

    parts = []
    for f in fields(config):
        if f.name == "utility_spec":
            continue
        parts.append(f"{f.name}={getattr(config, f.name)}")
    return hashlib.sha256(";".join(parts).encode()).hexdigest()[:16]
