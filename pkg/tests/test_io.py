import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastoblow import Grid, PhysParams
from elastoblow.config import ConfigError, parse_config, render_config
from elastoblow.core import ConservedState, to_conserved
from elastoblow.diagnostics import CSV_COLUMNS, DiagnosticsRow
from elastoblow.serialize import (
    HEADER_SIZE,
    MAGIC,
    BadMagic,
    SizeMismatch,
    TruncatedFile,
    VersionMismatch,
    csv_to_rows,
    read_checkpoint,
    read_csv,
    rows_to_csv,
    write_checkpoint,
    write_csv,
)

from conftest import random_state


@pytest.fixture
def ckpt(tmp_path, rng):
    g = Grid((5, 6, 7), 1.5)
    p = PhysParams(A=1.3, gamma=1.4, mu=0.1, lam=0.2, rho_bar=1.1, R=0.7)
    c = to_conserved(random_state(rng, g))
    c.t = 0.123456789
    path = tmp_path / "state.ckpt"
    write_checkpoint(c, g, p, path)
    return path, c, g, p


def test_checkpoint_round_trip_bit_exact(ckpt):
    path, c, g, p = ckpt
    back, head = read_checkpoint(path)
    assert np.array_equal(back.pack(), c.pack())
    assert back.pack().tobytes() == c.pack().tobytes()
    assert back.t == c.t and head.grid == g and head.physics == p and head.version == 1


def test_checkpoint_size_and_layout(ckpt):
    path, c, g, _ = ckpt
    buf = path.read_bytes()
    assert buf[:8] == MAGIC
    assert len(buf) == HEADER_SIZE + 13 * 5 * 6 * 7 * 8
    # x varies fastest: the second payload value is rho at (1, 0, 0)
    rho0, rho1 = struct.unpack_from("<2d", buf, HEADER_SIZE)
    assert rho0 == c.rho[0, 0, 0] and rho1 == c.rho[1, 0, 0]
    # the first Q_12 value follows 5 full fields
    (q01,) = struct.unpack_from("<d", buf, HEADER_SIZE + 5 * 210 * 8)
    assert q01 == c.Q[0, 1, 0, 0, 0]


def test_checkpoint_truncated(ckpt):
    path = ckpt[0]
    buf = path.read_bytes()
    path.write_bytes(buf[:-1])
    with pytest.raises(TruncatedFile) as exc:
        read_checkpoint(path)
    assert exc.value.code == "truncated_file"
    path.write_bytes(buf[:100])
    with pytest.raises(TruncatedFile):
        read_checkpoint(path)


def test_checkpoint_version_and_magic(ckpt):
    path = ckpt[0]
    buf = bytearray(path.read_bytes())
    bad = buf.copy()
    struct.pack_into("<I", bad, 8, 2)
    path.write_bytes(bytes(bad))
    with pytest.raises(VersionMismatch) as exc:
        read_checkpoint(path)
    assert exc.value.code == "version_mismatch"
    bad = buf.copy()
    bad[0:8] = b"NOTACKPT"
    path.write_bytes(bytes(bad))
    with pytest.raises(BadMagic) as exc:
        read_checkpoint(path)
    assert exc.value.code == "bad_magic"
    path.write_bytes(bytes(buf) + b"\0")
    with pytest.raises(SizeMismatch):
        read_checkpoint(path)


def test_checkpoint_shape_mismatch(tmp_path, rng):
    g = Grid.cube(4, 1.0)
    c = to_conserved(random_state(rng, g))
    with pytest.raises(ValueError):
        write_checkpoint(c, Grid.cube(5, 1.0), PhysParams(), tmp_path / "x")


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(*[finite] * 11, st.one_of(st.none(), finite)), min_size=0, max_size=5))
def test_csv_round_trip_exact(rows):
    rows = [DiagnosticsRow(*r) for r in rows]
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert csv_to_rows(text) == rows


def test_csv_header_fixed():
    assert CSV_COLUMNS == (
        "t", "m", "Ffun", "E", "trace", "div_res", "front",
        "front_bound", "bkm", "gradu_max", "rho_min", "riccati_lb",
    )
    with pytest.raises(ValueError):
        csv_to_rows("t,m\n1,2\n")


def test_csv_file_round_trip(tmp_path):
    rows = [DiagnosticsRow(0.1 * k, 1 / 3, 2 / 7, 1e-300, -0.0, 5e-324, 1.0, 2.0, 3.0, 4.0, 0.9, None if k else 1.5) for k in range(3)]
    write_csv(rows, tmp_path / "s.csv")
    assert read_csv(tmp_path / "s.csv") == rows


# ---------------------------------------------------------------- config

BASE = """
[physics]
A = 1.0
gamma = 2.0
R = 1.0

[grid]
n = 16
half_width = 2.0

[run]
t_end = 0.1
"""


def _cfg(extra="", base=BASE):
    return parse_config(base + extra)


def test_minimal_config_defaults():
    c = _cfg()
    assert c.grid == Grid.cube(16, 2.0)
    assert c.physics == PhysParams(A=1.0, gamma=2.0)
    assert c.scheme.order == 2 and c.cfl == 0.4 and c.run.mode == "inviscid"
    assert c.initial.kind == "equilibrium"


def _field(text):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    return exc.value.field


@pytest.mark.parametrize(
    "replace,field",
    [
        (("gamma = 2.0", "gamma = 1.0"), "physics.gamma"),
        (("gamma = 2.0", "gamma = 0.9"), "physics.gamma"),
        (("A = 1.0", "A = -1"), "physics.A"),
        (("A = 1.0", "A = abc"), "physics.A"),
        (("R = 1.0", "R = 1.0\nmu = -1"), "physics.mu"),
        (("R = 1.0", "R = 1.0\nmu = 1\nlambda = -1"), "physics.lambda"),
        (("R = 1.0", "R = 1.0\nfoo = 1"), "physics.foo"),
        (("n = 16", "n = 16, 16"), "grid.n"),
        (("n = 16", "n = 4"), "grid.n"),
        (("t_end = 0.1", "t_end = 0"), "run.t_end"),
        (("t_end = 0.1", "t_end = 0.1\nmode = stokes"), "run.mode"),
        (("half_width = 2.0", ""), "grid.half_width"),
    ],
)
def test_config_errors_name_field(replace, field):
    assert _field(BASE.replace(*replace)) == field


def test_viscous_gate_named():
    text = BASE.replace("R = 1.0", "R = 1.0\nmu = 1\nlambda = 8") + "mode = viscous\n"
    assert _field(text) == "physics.lambda"
    # the same physics is fine for an inviscid run
    parse_config(BASE.replace("R = 1.0", "R = 1.0\nmu = 1\nlambda = 8"))


def test_config_unknown_section_and_misplaced_keys():
    assert _field(BASE + "\n[extra]\nx = 1\n") == "extra"
    assert _field(BASE + "\n[initial]\nkind = equilibrium\nvelocity_amplitude = 1\n") == "initial.velocity_amplitude"
    assert _field(BASE + "\n[initial]\nkind = bump\npath = x.ckpt\n") == "initial.path"
    assert _field(BASE + "\n[initial]\nkind = checkpoint\n") == "initial.path"
    assert _field(BASE + "\n[initial]\nkind = bump\ndensity_bump = -1\n") == "initial.density_bump"
    assert _field(BASE.replace("R = 1.0", "R = 2.5") + "\n[initial]\nkind = bump\n") == "physics.R"
    assert _field(BASE + "\n[convergence]\nresolutions = 16, 12, 24\n") == "convergence.resolutions"


def test_keys_case_insensitive():
    c = _cfg(base=BASE.replace("A = 1.0", "a = 3.0").replace("[run]", "[RUN]"))
    assert c.physics.A == 3.0


def test_render_parse_round_trip(tmp_path):
    text = BASE.replace("R = 1.0", "R = 0.75\nmu = 0.1\nlambda = 0.05") + """
mode = viscous
output_stride = 3
gradu_ceiling = 12.5

[scheme]
order = 4
dissipation_coeff = 0.01
cfl = 0.3

[initial]
kind = bump
velocity_amplitude = 0.1
density_bump = 0.02

[convergence]
resolutions = 16, 24, 32
"""
    c = parse_config(text)
    again = parse_config(render_config(c))
    assert again == c


def test_inline_comments_ignored():
    c = _cfg(base=BASE.replace("A = 1.0", "A = 2.5   # pressure constant").replace("n = 16", "n = 16 ; cells"))
    assert c.physics.A == 2.5 and c.grid.shape == (16, 16, 16)
