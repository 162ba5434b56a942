"""Priority-logic utilities and balanced policy-gradient training."""

from . import bpg, config, envs, lang, nets, powermean, toy

__all__ = ["bpg", "config", "envs", "lang", "nets", "powermean", "toy"]
__version__ = "0.1.0"
