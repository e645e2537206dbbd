"""End-to-end CLI checks: exit codes, stdout contract, file determinism."""

import json
from pathlib import Path

import pytest

from fsbclab import FsbcError, SolverStalled
from fsbclab import cli

CHANNELS = Path(__file__).resolve().parent.parent / "channels"
SINGLE = str(CHANNELS / "bsbc_single_state.json")
TWO_STATE = str(CHANNELS / "bsbc_two_state.json")
FROZEN = str(CHANNELS / "bsbc_frozen_states.json")


def run(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# -------------------------------------------------------------- exit codes

def test_validate_ok(capsys):
    code, out, _ = run(capsys, ["validate", "--spec", SINGLE])
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("defaults: ")
    assert lines[1].startswith("config: ")
    assert "spec OK" in out
    assert "|S|=1" in out


def test_defaults_line_is_complete(capsys):
    _, out, _ = run(capsys, ["validate", "--spec", SINGLE])
    head = out.splitlines()[0]
    for key, val in cli.DEFAULTS.items():
        assert f"{key}={val}" in head


def test_missing_spec_file(capsys):
    code, _, err = run(capsys, ["validate", "--spec", "/nonexistent/chan.json"])
    assert code == 1
    assert "error" in err


def test_malformed_spec(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    code, _, err = run(capsys, ["validate", "--spec", str(bad)])
    assert code == 1

    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"type": "kernel", "x_size": 2}))
    code, _, err = run(capsys, ["validate", "--spec", str(missing)])
    assert code == 1
    assert "error" in err


def test_rate_too_high_is_budget_exit(tmp_path, capsys):
    code, _, err = run(
        capsys,
        ["simulate", "--spec", SINGLE, "--out", str(tmp_path),
         "--r1", "3.0", "--r2", "0.1", "--K", "4"],
    )
    assert code == 2
    assert "exceeds cap" in err


def test_enumeration_budget_exit(tmp_path, capsys):
    code, _, err = run(
        capsys,
        ["region", "--spec", TWO_STATE, "--out", str(tmp_path), "--n", "9"],
    )
    assert code == 2
    assert "error" in err


def test_solver_stall_maps_to_exit_3(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise SolverStalled("no progress", best=None)

    monkeypatch.setattr(cli, "sweep_support", boom)
    code, _, err = run(
        capsys, ["region", "--spec", SINGLE, "--out", str(tmp_path)]
    )
    assert code == 3
    assert "stalled" in err


def test_unexpected_library_error_maps_to_exit_3(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise FsbcError("wedged")

    monkeypatch.setattr(cli, "sweep_support", boom)
    code, _, err = run(
        capsys, ["region", "--spec", SINGLE, "--out", str(tmp_path)]
    )
    assert code == 3
    assert "internal error" in err


def test_usage_errors(capsys):
    assert run(capsys, [])[0] == 1
    assert run(capsys, ["region"])[0] == 1
    assert run(capsys, ["validate", "--spec", SINGLE, "--frobnicate"])[0] == 1
    assert run(capsys, ["frobnicate"])[0] == 1


def test_help_and_version_exit_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "fsbclab" in capsys.readouterr().out


# ------------------------------------------------------------ file outputs

def test_analyze_reports(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        ["analyze", "--spec", SINGLE, "--out", str(tmp_path), "--n", "2"],
    )
    assert code == 0
    deg = json.loads((tmp_path / "degradedness.json").read_text())
    assert deg["report"]["physical"]["verdict"] == "holds"
    assert deg["report"]["stochastic"]["verdict"] == "feasible"
    assert deg["block_diagnostics"]["2"]["pushforward_residual"] < 1e-9
    ind = json.loads((tmp_path / "indecomposability.json").read_text())
    assert ind["report"]["verdict"] == "indecomposable"
    assert "physical: holds" in out
    assert "stochastic: feasible" in out
    assert "indecomposability: indecomposable" in out


def test_analyze_frozen_chain_verdict(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        ["analyze", "--spec", FROZEN, "--out", str(tmp_path), "--n", "2"],
    )
    assert code == 0
    assert "indecomposability: not-indecomposable" in out


def test_region_outputs(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        ["region", "--spec", SINGLE, "--out", str(tmp_path),
         "--lambdas", "5", "--starts", "4"],
    )
    assert code == 0
    meta = json.loads((tmp_path / "region_meta.json").read_text())
    assert len(meta["F_n"]) == 5
    assert meta["shape"]["convex_ok"]
    assert all(meta["converged"])
    assert "threads" not in meta["config"]
    assert "out" not in meta["config"]
    csv_text = (tmp_path / "region.csv").read_text()
    assert csv_text.startswith("# fsbclab")
    assert "runtime" not in csv_text
    assert "runtime" not in (tmp_path / "boundary.dat").read_text()
    assert "runtime:" in out


def test_supadd_outputs(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        ["supadd", "--spec", SINGLE, "--out", str(tmp_path),
         "--lambdas", "3", "--starts", "4"],
    )
    assert code == 0
    payload = json.loads((tmp_path / "supadd.json").read_text())
    assert payload["all_ok"] is True
    assert len(payload["reports"]) == 3
    assert "bound ok" in out


def test_simulate_outputs(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        ["simulate", "--spec", SINGLE, "--out", str(tmp_path),
         "--r1", "0.1", "--r2", "0.05", "--K", "2",
         "--lambdas", "3", "--starts", "4", "--trials", "200"],
    )
    assert code == 0
    sim = json.loads((tmp_path / "simulation.json").read_text())
    assert sim["codebook"]["symbols"] == 2
    assert sim["errors"]["trials"] == 200
    assert sim["fano"] is not None
    assert "P_e overall" in out


def test_out_directory_is_created(tmp_path, capsys):
    target = tmp_path / "a" / "b" / "c"
    code, _, _ = run(
        capsys,
        ["supadd", "--spec", SINGLE, "--out", str(target),
         "--lambdas", "1", "--starts", "2"],
    )
    assert code == 0
    assert (target / "supadd.json").exists()


# ------------------------------------------------------------- determinism

def region_bytes(tmp_path, capsys, tag, threads):
    out = tmp_path / tag
    code, _, _ = run(
        capsys,
        ["region", "--spec", TWO_STATE, "--out", str(out),
         "--lambdas", "5", "--starts", "4", "--threads", str(threads)],
    )
    assert code == 0
    return {
        name: (out / name).read_bytes()
        for name in ("region.csv", "boundary.dat", "region_meta.json")
    }


def test_region_outputs_are_byte_stable(tmp_path, capsys):
    a = region_bytes(tmp_path, capsys, "a", threads=1)
    b = region_bytes(tmp_path, capsys, "b", threads=1)
    c = region_bytes(tmp_path, capsys, "c", threads=2)
    assert a == b == c


def test_simulate_outputs_are_byte_stable(tmp_path, capsys):
    def one(tag, threads):
        out = tmp_path / tag
        code, _, _ = run(
            capsys,
            ["simulate", "--spec", TWO_STATE, "--out", str(out),
             "--r1", "0.05", "--r2", "0.02", "--trials", "200",
             "--lambdas", "3", "--starts", "4", "--threads", str(threads)],
        )
        assert code == 0
        return (out / "simulation.json").read_bytes()

    assert one("a", 1) == one("b", 1) == one("c", 2)
