import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmetransform import cli
from pmetransform.config import (
    PRESETS,
    BarenblattConfig,
    ConfigError,
    PsiConfig,
    TransformConfig,
    VerifyConfig,
    parse_config,
    render_config,
)
from pmetransform.grid import read_field_csv


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def test_barenblatt_example(tmp_path):
    rc = run(tmp_path, "barenblatt", "--m", "2", "--d", "1", "--C", "1", "--t0", "1", "--t1", "2",
             "--nt", "101", "--R", "6", "--nx", "301")
    assert rc == 0
    f = read_field_csv(tmp_path / "field.csv")
    assert f.grid.shape == (101, 301)
    assert f.values[0, 150] == 1.0 and f.grid.x[150] == 0.0
    support = np.loadtxt(tmp_path / "support.csv", delimiter=",", skiprows=1)
    assert support[0, 1] == pytest.approx(np.sqrt(12.0))
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == "0x5eed" and set(manifest["outputs"]) == {"field.csv", "support.csv"}


def test_usage_and_validation_errors(tmp_path, capsys):
    assert run(tmp_path, "barenblatt", "--nx", "11") == 2
    assert "--m" in capsys.readouterr().err
    assert run(tmp_path, "barenblatt", "--m", "0.5") == 2
    assert "--m" in capsys.readouterr().err
    assert run(tmp_path, "barenblatt", "--m", "two") == 2
    assert run(tmp_path, "frobnicate") == 2
    assert run(tmp_path, "verify", "--m", "2", "--levels", "2") == 2
    assert run(tmp_path, "psi", "--preset", "nope") == 2
    assert run(tmp_path, "psi", "--preset", "barenblatt-m2", "--ks", "3") == 2
    assert run(tmp_path, "transform", "--m", "2", "--table", "0:16:0.5", "--M", "4") == 2


def test_transform_example(tmp_path):
    assert run(tmp_path, "transform", "--m", "2", "--alpha", "0.5", "--table", "0:16:0.5") == 0
    table = np.loadtxt(tmp_path / "transform.csv", delimiter=",", skiprows=1)
    assert table.shape == (33, 8)
    assert table[-1, 0] == 16.0 and table[-1, 4] == 8.0
    np.testing.assert_allclose(table[1:, 6], table[1:, 0], rtol=1e-12)


def test_solve_and_numerical_failure(tmp_path, monkeypatch):
    assert run(tmp_path, "solve", "--preset", "barenblatt-m2", "--nx", "101", "--nt", "11") == 0
    summary = dict(line.split(",") for line in (tmp_path / "summary.csv").read_text().splitlines()[1:])
    assert float(summary["sup_error"]) < 1e-3 and float(summary["mass_drift"]) < 1e-6

    def boom(*a, **k):
        raise cli.SolverError("dt collapsed", 1.5)

    monkeypatch.setattr(cli, "solve", boom)
    assert run(tmp_path / "b", "solve", "--preset", "barenblatt-m2", "--nx", "101") == 1


def test_verify_and_psi(tmp_path):
    out = tmp_path / "v"
    assert run(out, "verify", "--preset", "barenblatt-m2-alpha05", "--levels", "3", "--nx0", "41", "--t1", "1.25") == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0].startswith("level,nt,nx,sup_res_orig,sup_res_trans,semi_dtu,semi_lap_u,semi_dtv,semi_lap_Phi,runtime_s")
    assert len(lines) == 4
    ident = np.loadtxt(out / "identity.csv", delimiter=",", skiprows=1, usecols=1)
    assert np.all(ident <= 1e-9)
    out = tmp_path / "p"
    assert run(out, "psi", "--preset", "barenblatt-m2", "--ks", "0.5,0.25,0.125", "--nt", "51", "--nx", "81") == 0
    psi = np.loadtxt(out / "psi.csv", delimiter=",", skiprows=1)
    assert list(psi[:, 0]) == [0.5, 0.25, 0.125]
    assert np.all(np.diff(psi[:, 1]) >= 0) and np.all(np.diff(psi[:, 2]) >= 0)


def test_outputs_are_deterministic(tmp_path):
    args = ["psi", "--preset", "barenblatt-m2", "--ks", "0.5,0.25", "--nt", "41", "--nx", "61", "--seed", "0x2A"]
    assert run(tmp_path / "a", *args) == 0
    assert run(tmp_path / "b", *args) == 0
    for name in ("psi.csv", "psi_components.csv", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert ma["seed"] == "0x2a"


def test_rerun_from_written_config(tmp_path):
    assert run(tmp_path / "a", "barenblatt", "--m", "3", "--nx", "41", "--nt", "5", "--C", "0.5") == 0
    assert run(tmp_path / "b", "barenblatt", "--config", str(tmp_path / "a" / "config.json")) == 0
    assert (tmp_path / "a" / "field.csv").read_bytes() == (tmp_path / "b" / "field.csv").read_bytes()
    # explicit flags override the file
    assert run(tmp_path / "c", "barenblatt", "--config", str(tmp_path / "a" / "config.json"), "--nx", "21") == 0
    assert read_field_csv(tmp_path / "c" / "field.csv").grid.nx == 21


def test_bad_config_file(tmp_path):
    (tmp_path / "bad.json").write_text('{"command": "barenblatt", "m": 2, "colour": "red"}')
    assert run(tmp_path, "barenblatt", "--config", str(tmp_path / "bad.json")) == 2
    (tmp_path / "other.json").write_text('{"command": "psi", "m": 2}')
    assert run(tmp_path, "barenblatt", "--config", str(tmp_path / "other.json")) == 2
    (tmp_path / "junk.json").write_text("{")
    assert run(tmp_path, "barenblatt", "--config", str(tmp_path / "junk.json")) == 2


def test_presets_are_valid():
    for name in PRESETS:
        for cmd in ("barenblatt", "solve", "verify", "psi"):
            cli.apply_preset(cmd, name).validate()


_pos = st.floats(0.1, 10, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(
    st.builds(BarenblattConfig, m=st.floats(1.01, 6), C=_pos, nx=st.integers(5, 999)),
    st.builds(PsiConfig, m=st.floats(1.01, 6), ks=st.lists(_pos, min_size=1, max_size=5)),
    st.builds(VerifyConfig, m=st.floats(1.01, 6), levels=st.integers(3, 6), source=st.sampled_from(["analytic", "solver"])),
    st.builds(TransformConfig, m=st.floats(1.01, 6), M=st.one_of(st.none(), _pos), table=st.just("0:1:0.25")),
)
def test_config_round_trip(bc, pc, vc, tc):
    for cmd, cfg in (("barenblatt", bc), ("psi", pc), ("verify", vc), ("transform", tc)):
        assert parse_config(render_config(cmd, cfg)) == (cmd, cfg)


def test_table_parsing():
    assert TransformConfig(m=2, table="0:1:0.25").table_points() == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ConfigError):
        TransformConfig(m=2, table="0-1").table_points()
