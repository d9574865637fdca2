import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdflux.cli import main
from rdflux.config import ConfigError, RunConfig, parse_config, render_config


def test_parse_minimal_fills_defaults():
    cfg = parse_config("problem = advection\nscheme = nscheme\nnx = 4\nny = 4\n")
    assert cfg.degree == 1
    assert cfg.tol == 1e-10
    assert cfg.audits == ()


def test_parse_comments_and_blank_lines():
    text = "# a comment\n\nproblem = burgers # trailing comment\nscheme = rusanov\n"
    cfg = parse_config(text)
    assert cfg.problem == "burgers"
    assert cfg.scheme == "rusanov"


def test_negative_tol_rejected():
    with pytest.raises(ConfigError):
        parse_config("tol = -1e-8\n")


def test_unknown_key_line_number():
    with pytest.raises(ConfigError) as err:
        parse_config("problem = advection\nwhatsthis = 3\n")
    assert "line 2" in str(err.value)


def test_bad_value_line_number():
    with pytest.raises(ConfigError) as err:
        parse_config("nx = plenty\n")
    assert "line 1" in str(err.value)


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("nx = 3\nnx = 4\n")


def test_unknown_names_rejected():
    with pytest.raises(ConfigError):
        parse_config("scheme = wizardry\n")
    with pytest.raises(ConfigError):
        parse_config("audits = conservation,monotone-vibes\n")


def test_roundtrip_default():
    cfg = RunConfig()
    assert parse_config(render_config(cfg)) == cfg


@settings(max_examples=60, deadline=None)
@given(
    nx=st.integers(1, 64),
    tol=st.floats(1e-14, 1e-2),
    nu=st.floats(0.01, 1.0),
    theta=st.floats(0.0, 10.0),
    scheme=st.sampled_from(["nscheme", "rusanov", "limited-supg", "dgrds-o1"]),
    audits=st.lists(
        st.sampled_from(["conservation", "entropy", "flux-recovery"]),
        unique=True,
        max_size=3,
    ),
)
def test_roundtrip_property(nx, tol, nu, theta, scheme, audits):
    cfg = RunConfig(
        nx=nx, tol=tol, nu=nu, theta_k=theta, scheme=scheme, audits=tuple(audits)
    ).validate()
    assert parse_config(render_config(cfg)) == cfg


def test_mesh_gen_cli(tmp_path, capsys):
    out = tmp_path / "m.txt"
    status = main(["mesh", "gen", "4", "4", str(out)])
    assert status == 0
    text = out.read_text()
    assert text.startswith("rdmesh 1\n")
    from rdflux.mesh import read_mesh

    m = read_mesh(out)
    assert m.num_triangles == 32
    assert len(m.boundary_faces) == 16


def _write_cfg(path, extra=""):
    path.write_text(
        "problem = advection\n"
        "scheme = nscheme\n"
        "nx = 6\nny = 6\n"
        "tol = 1e-9\n"
        "audits = conservation,flux-recovery\n"
        f"output_dir = {path.parent / 'out'}\n" + extra
    )


def test_cli_run_produces_artifacts(tmp_path, capsys):
    cfgfile = tmp_path / "run.cfg"
    _write_cfg(cfgfile)
    status = main(["run", str(cfgfile)])
    assert status == 0
    outdir = tmp_path / "out"
    assert (outdir / "solution.txt").exists()
    assert (outdir / "summary.txt").exists()
    assert (outdir / "conservation.csv").exists()
    assert (outdir / "flux_recovery.csv").exists()
    summary = (outdir / "summary.txt").read_text()
    assert "ALL AUDITS PASSED" in summary
    assert "[PASS] conservation" in summary


def test_cli_audit_mode(tmp_path, capsys):
    cfgfile = tmp_path / "audit.cfg"
    _write_cfg(cfgfile, "scheme = rusanov\n")
    # rewrite without the duplicate scheme key
    cfgfile.write_text(
        "problem = burgers\nscheme = rusanov\nnx = 4\nny = 4\n"
        "audits = conservation,entropy,decomposition\n"
        f"output_dir = {tmp_path / 'aout'}\n"
    )
    status = main(["audit", str(cfgfile)])
    assert status == 0
    summary = (tmp_path / "aout" / "summary.txt").read_text()
    assert "[PASS] entropy" in summary
    assert "[PASS] decomposition" in summary


def test_cli_unknown_problem(tmp_path, capsys):
    cfgfile = tmp_path / "bad.cfg"
    cfgfile.write_text("problem = mystery\n")
    assert main(["run", str(cfgfile)]) == 2


def test_cli_missing_file(capsys):
    assert main(["run", "/nonexistent/nope.cfg"]) == 2


def test_cli_determinism_byte_identical(tmp_path, capsys):
    """Identical configurations produce byte-identical artifacts."""
    outs = []
    for tag in ("a", "b"):
        cfgfile = tmp_path / f"{tag}.cfg"
        cfgfile.write_text(
            "problem = advection\nscheme = rusanov\nnx = 5\nny = 5\n"
            "audits = conservation,flux-recovery,entropy\n"
            f"output_dir = {tmp_path / ('out_' + tag)}\n"
        )
        assert main(["run", str(cfgfile)]) == 0
        outs.append(tmp_path / ("out_" + tag))
    for name in ("solution.txt", "conservation.csv", "flux_recovery.csv",
                 "entropy_elements.csv", "entropy_faces.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    # summaries differ only in the configured output paths and timing line
    s0 = [l for l in (outs[0] / "summary.txt").read_text().splitlines()
          if "output_dir" not in l and "wall=" not in l]
    s1 = [l for l in (outs[1] / "summary.txt").read_text().splitlines()
          if "output_dir" not in l and "wall=" not in l]
    assert s0 == s1


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "rdflux.cli", "mesh", "gen", "2", "2", os.devnull],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
