"""Glue between a parsed Config and the solver."""

from __future__ import annotations

import os
from typing import Optional

from .config import Config, ConfigError
from .core import State, to_primitive
from .initdata import make_bump, make_equilibrium
from .serialize import CheckpointError, read_checkpoint
from .solver import RunOutcome, run

WORKERS_ENV = "ELASTOBLOW_WORKERS"


def workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(WORKERS_ENV, f"expected a positive integer, got {raw!r}")
    return n


def build_initial(cfg: Config) -> State:
    kind = cfg.initial.kind
    if kind == "equilibrium":
        return make_equilibrium(cfg.physics, cfg.grid)
    if kind == "bump":
        return make_bump(cfg.initial.bump, cfg.physics, cfg.grid)
    try:
        cs, head = read_checkpoint(cfg.initial.path)
    except OSError as exc:
        raise ConfigError("initial.path", f"cannot read {cfg.initial.path}: {exc.strerror}") from None
    except CheckpointError as exc:
        raise ConfigError("initial.path", f"{exc.code}: {exc}") from None
    if head.grid != cfg.grid:
        raise ConfigError("initial.path", f"checkpoint grid {head.grid} differs from configured {cfg.grid}")
    if head.physics.rho_bar != cfg.physics.rho_bar:
        raise ConfigError("initial.path", "checkpoint rho_bar differs from [physics] rho_bar")
    return to_primitive(cs)


def execute(cfg: Config, initial: Optional[State] = None) -> RunOutcome:
    s0 = build_initial(cfg) if initial is None else initial
    return run(s0, cfg.physics, cfg.grid, cfg.scheme, cfg.run)
