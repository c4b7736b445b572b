"""INI run configuration.

Sections and keys::

    [physics]     A, gamma, mu, lambda, rho_bar, R
    [grid]        n (one integer or three, comma separated), half_width
    [scheme]      order, dissipation_coeff, cfl
    [run]         mode, t_end, output_stride, rho_floor, gradu_ceiling,
                  front_tol, max_steps
    [initial]     kind = equilibrium | bump | checkpoint
                  velocity_amplitude, density_bump, F_potential_amplitude, path
    [convergence] resolutions (three integers)
    [output]      dir

Keys are case-insensitive. Anything not listed above is rejected with the
offending key named, and every physical validation happens at parse time.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from .core import ElastoblowError, Grid, InvalidParameter, PhysParams
from .initdata import BumpSpec
from .solver import VISCOUS, RunConfig
from .stencils import StencilConfig


class ConfigError(ElastoblowError, ValueError):
    """Unreadable or invalid configuration; ``field`` names the culprit as section.key."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


# lower-case key -> canonical display name
_KEYS = {
    "physics": {"a": "A", "gamma": "gamma", "mu": "mu", "lambda": "lambda", "rho_bar": "rho_bar", "r": "R"},
    "grid": {"n": "n", "half_width": "half_width"},
    "scheme": {"order": "order", "dissipation_coeff": "dissipation_coeff", "cfl": "cfl"},
    "run": {
        "mode": "mode", "t_end": "t_end", "output_stride": "output_stride", "rho_floor": "rho_floor",
        "gradu_ceiling": "gradu_ceiling", "front_tol": "front_tol", "max_steps": "max_steps",
    },
    "initial": {
        "kind": "kind", "velocity_amplitude": "velocity_amplitude", "density_bump": "density_bump",
        "f_potential_amplitude": "F_potential_amplitude", "path": "path",
    },
    "convergence": {"resolutions": "resolutions"},
    "output": {"dir": "dir"},
}
_REQUIRED = {"physics": (), "grid": ("n", "half_width"), "run": ("t_end",)}
# physics attribute name for each display key
_PHYS_ATTR = {"A": "A", "gamma": "gamma", "mu": "mu", "lambda": "lam", "rho_bar": "rho_bar", "R": "R"}

INITIAL_KINDS = ("equilibrium", "bump", "checkpoint")


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "equilibrium"
    bump: BumpSpec = field(default_factory=BumpSpec)
    path: Optional[Path] = None


@dataclass(frozen=True)
class Config:
    physics: PhysParams
    grid: Grid
    scheme: StencilConfig
    cfl: float
    run: RunConfig
    initial: InitialSpec
    resolutions: Optional[Tuple[int, int, int]] = None
    output_dir: Optional[Path] = None
    source: Optional[Path] = None

    @property
    def viscous(self) -> bool:
        return self.run.mode == VISCOUS

    def with_resolution(self, n: int) -> "Config":
        from dataclasses import replace

        return replace(self, grid=Grid.cube(n, self.grid.half_width))


def _float(section: str, key: str, raw: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}", f"expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{section}.{key}", f"must be finite, got {raw!r}")
    return v


def _int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}", f"expected an integer, got {raw!r}") from None


def _ints(section: str, key: str, raw: str) -> Tuple[int, ...]:
    return tuple(_int(section, key, part.strip()) for part in raw.split(",") if part.strip())


def _read(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"), default_section="\x00none")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from None
    out = {}
    for sec in cp.sections():
        name = sec.strip().lower()
        if name not in _KEYS:
            raise ConfigError(sec, "unknown section")
        vals = {}
        for key, raw in cp.items(sec):
            k = key.strip().lower()
            if k not in _KEYS[name]:
                raise ConfigError(f"{name}.{key}", "unknown key")
            vals[_KEYS[name][k]] = raw.strip()
        out[name] = vals
    for sec, keys in _REQUIRED.items():
        if sec not in out:
            raise ConfigError(sec, "missing section")
        for k in keys:
            if k not in out[sec]:
                raise ConfigError(f"{sec}.{k}", "missing key")
    return out


def _physics(vals: dict) -> PhysParams:
    kwargs = {_PHYS_ATTR[k]: _float("physics", k, v) for k, v in vals.items()}
    try:
        return PhysParams(**kwargs)
    except InvalidParameter as exc:
        raise ConfigError(f"physics.{exc.field}", str(exc).split(": ", 1)[-1]) from None


def _grid(vals: dict) -> Grid:
    n = _ints("grid", "n", vals["n"])
    if len(n) == 1:
        n = n * 3
    if len(n) != 3:
        raise ConfigError("grid.n", f"expected 1 or 3 integers, got {vals['n']!r}")
    try:
        return Grid(n, _float("grid", "half_width", vals["half_width"]))
    except InvalidParameter as exc:
        raise ConfigError(f"grid.{exc.field}", str(exc).split(": ", 1)[-1]) from None


def parse_config(text: str, source: Optional[Path] = None) -> Config:
    d = _read(text)
    p = _physics(d["physics"])
    g = _grid(d["grid"])

    sch = d.get("scheme", {})
    try:
        sc = StencilConfig(
            order=_int("scheme", "order", sch["order"]) if "order" in sch else 2,
            dissipation_coeff=(
                _float("scheme", "dissipation_coeff", sch["dissipation_coeff"]) if "dissipation_coeff" in sch else 0.02
            ),
        )
    except InvalidParameter as exc:
        raise ConfigError(f"scheme.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    cfl = _float("scheme", "cfl", sch["cfl"]) if "cfl" in sch else 0.4

    r = d["run"]
    kw = {"t_end": _float("run", "t_end", r["t_end"]), "cfl": cfl}
    if "mode" in r:
        kw["mode"] = r["mode"].lower()
    for k in ("rho_floor", "gradu_ceiling", "front_tol"):
        if k in r:
            kw[k] = _float("run", k, r[k])
    for k in ("output_stride", "max_steps"):
        if k in r:
            kw[k] = _int("run", k, r[k])
    try:
        rc = RunConfig(**kw)
    except InvalidParameter as exc:
        sec = "scheme" if exc.field == "cfl" else "run"
        raise ConfigError(f"{sec}.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    if rc.max_steps < 1:
        raise ConfigError("run.max_steps", "must be >= 1")
    if rc.mode == VISCOUS and not p.viscous_ok:
        raise ConfigError(
            "physics.lambda", f"viscous mode requires 7*mu > lambda (mu={p.mu!r}, lambda={p.lam!r})"
        )

    ini = d.get("initial", {})
    kind = ini.get("kind", "equilibrium").lower()
    if kind not in INITIAL_KINDS:
        raise ConfigError("initial.kind", f"must be one of {', '.join(INITIAL_KINDS)}; got {kind!r}")
    amps = {
        k: _float("initial", k, ini[k])
        for k in ("velocity_amplitude", "density_bump", "F_potential_amplitude")
        if k in ini
    }
    if amps and kind != "bump":
        raise ConfigError(f"initial.{next(iter(amps))}", f"only valid with kind = bump (kind is {kind!r})")
    path = None
    if kind == "checkpoint":
        if "path" not in ini:
            raise ConfigError("initial.path", "required when kind = checkpoint")
        path = Path(ini["path"])
        if source is not None and not path.is_absolute():
            path = source.parent / path
    elif "path" in ini:
        raise ConfigError("initial.path", f"only valid with kind = checkpoint (kind is {kind!r})")
    bump = BumpSpec(**amps)
    if kind == "bump":
        if bump.density_bump <= -p.rho_bar:
            raise ConfigError("initial.density_bump", f"makes the density non-positive (rho_bar={p.rho_bar!r})")
        if p.R >= g.half_width:
            raise ConfigError("physics.R", f"support radius must be smaller than grid.half_width={g.half_width!r}")
    if min(g.n) < 2 * sc.collar + 1:
        raise ConfigError("grid.n", f"too small for the order-{sc.order} stencil (need >= {2 * sc.collar + 1})")

    res = None
    if "convergence" in d and "resolutions" in d["convergence"]:
        res = _ints("convergence", "resolutions", d["convergence"]["resolutions"])
        if len(res) != 3 or not (0 < res[0] < res[1] < res[2]):
            raise ConfigError("convergence.resolutions", "expected three increasing positive integers")
        if res[0] < 2 * sc.collar + 1:
            raise ConfigError("convergence.resolutions", "coarsest resolution too small for the stencil")
    out_dir = None
    if "output" in d and "dir" in d["output"]:
        out_dir = Path(d["output"]["dir"])
        if source is not None and not out_dir.is_absolute():
            out_dir = source.parent / out_dir

    return Config(p, g, sc, cfl, rc, InitialSpec(kind, bump, path), res, out_dir, source)


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("file", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=path)


def render_config(c: Config) -> str:
    """Inverse of parse_config for the fields it reads (paths as given)."""
    p, g, r = c.physics, c.grid, c.run
    lines = [
        "[physics]",
        f"A = {p.A!r}", f"gamma = {p.gamma!r}", f"mu = {p.mu!r}", f"lambda = {p.lam!r}",
        f"rho_bar = {p.rho_bar!r}", f"R = {p.R!r}",
        "", "[grid]", f"n = {', '.join(str(v) for v in g.n)}", f"half_width = {g.half_width!r}",
        "", "[scheme]", f"order = {c.scheme.order}", f"dissipation_coeff = {c.scheme.dissipation_coeff!r}",
        f"cfl = {c.cfl!r}",
        "", "[run]", f"mode = {r.mode}", f"t_end = {r.t_end!r}", f"output_stride = {r.output_stride}",
        f"front_tol = {r.front_tol!r}", f"max_steps = {r.max_steps}",
    ]
    if r.rho_floor is not None:
        lines.append(f"rho_floor = {r.rho_floor!r}")
    if r.gradu_ceiling is not None:
        lines.append(f"gradu_ceiling = {r.gradu_ceiling!r}")
    lines += ["", "[initial]", f"kind = {c.initial.kind}"]
    if c.initial.kind == "bump":
        b = c.initial.bump
        lines += [
            f"velocity_amplitude = {b.velocity_amplitude!r}",
            f"density_bump = {b.density_bump!r}",
            f"F_potential_amplitude = {b.F_potential_amplitude!r}",
        ]
    if c.initial.path is not None:
        lines.append(f"path = {c.initial.path}")
    if c.resolutions is not None:
        lines += ["", "[convergence]", f"resolutions = {', '.join(str(v) for v in c.resolutions)}"]
    if c.output_dir is not None:
        lines += ["", "[output]", f"dir = {c.output_dir}"]
    return "\n".join(lines) + "\n"
