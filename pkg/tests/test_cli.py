import json
import shutil
from collections import namedtuple

import pytest

from photon_mux import cli
from photon_mux.analytic import general_pn
from photon_mux.arch import ChannelSpec, Efficiencies
from photon_mux.simulate import CaseReport, Discrepancy


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dist_faint_laser_table(capsys):
    code, out, _ = run(capsys, "dist", "--scheme", "faint_laser", "--pump", "1")
    assert code == 0
    assert "P1 = 0.36788" in out and "SNR = 1.39221" in out


def test_dist_single_crystal_tree_equals_laser(capsys):
    _, a, _ = run(capsys, "dist", "--scheme", "fl", "--pump", "0.7", "--format", "json")
    _, b, _ = run(capsys, "dist", "--scheme", "symmetric", "--k", "0", "--pump", "0.7", "--eta", "0.4",
                  "--gamma", "0.3", "--format", "json")
    assert json.loads(a)["probs"] == pytest.approx(json.loads(b)["probs"], rel=1e-14, abs=1e-300)


def test_dist_general_channels_file(capsys, tmp_path):
    chans = [{"mu": 0.3, "k": 1}, {"mu": 0.9, "k": 2}]
    f = tmp_path / "ch.json"
    f.write_text(json.dumps(chans))
    out_file = tmp_path / "d.json"
    code, _, _ = run(capsys, "dist", "--scheme", "general", "--channels", str(f), "--eta", "0.6",
                     "--gamma", "0.5", "--n-max", "6", "--out", str(out_file))
    assert code == 0
    probs = json.loads(out_file.read_text())["probs"]
    ch = [ChannelSpec(c["mu"], c["k"]) for c in chans]
    assert probs == [general_pn(ch, Efficiencies(0.6, 0.5), n) for n in range(7)]


def test_optimize_faint_laser(capsys):
    code, out, _ = run(capsys, "optimize", "--scheme", "fl", "--theta", "10")
    assert code == 0
    assert json.loads(out)["p1_bar"] == pytest.approx(0.155, abs=0.002)


def test_flags_override_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scheme": {"scheme": "asymmetric", "m": 4, "pump": 0.1}, "theta": 5, "eta": 0.62,
                               "gamma": 0.5}))
    _, out_file, _ = run(capsys, "optimize", "--config", str(cfg))
    _, out_flag, _ = run(capsys, "optimize", "--config", str(cfg), "--theta", "10", "--m", "8")
    a, b = json.loads(out_file), json.loads(out_flag)
    assert a["theta"] == 5 and a["chosen_m"] == 4
    assert b["theta"] == 10 and b["chosen_m"] == 8 and b["eta"] == 0.62


@pytest.mark.parametrize(
    "argv",
    [
        ["dist", "--scheme", "nope", "--pump", "1"],
        ["dist", "--scheme", "fl"],
        ["dist", "--scheme", "fl", "--pump", "1", "--eta", "2"],
        ["optimize", "--scheme", "fl", "--theta", "0"],
        ["optimize", "--best"],
        ["sweep", "--kind", "contour"],
        ["sweep", "--kind", "curve", "--scheme", "symmetric", "--m-values"],
        ["dist", "--scheme", "{bad json", "--pump", "1"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(cli.main(argv))
    assert exc.value.code == 2


def test_unknown_config_key_exit_2(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"theta": 10, "colour": "red"}))
    code, _, err = run(capsys, "optimize", "--scheme", "fl", "--config", str(cfg))
    assert code == 2 and "colour" in err
    code, _, _ = run(capsys, "optimize", "--scheme", "fl", "--config", str(tmp_path / "missing.json"))
    assert code == 2


def test_sweep_curve_and_contour_outputs(capsys, tmp_path):
    csv_path, svg_path = tmp_path / "c.csv", tmp_path / "c.svg"
    code, _, _ = run(capsys, "sweep", "--kind", "curve", "--scheme", "asymmetric", "--m", "6", "--eta", "0.62",
                     "--gamma", "0.5", "--out", str(csv_path), "--svg", str(svg_path))
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "m,p1,mu_star,snr" and len(lines) == 6
    assert svg_path.read_text().startswith("<?xml")
    code, out, _ = run(capsys, "sweep", "--metric", "delta", "--m", "4", "--grid", "3")
    assert code == 0
    assert out.splitlines()[0] == "eta,gamma,value,chosen_m,mu_star" and len(out.splitlines()) == 10


def test_sweep_outputs_are_byte_identical(capsys, tmp_path):
    for name in ("a", "b"):
        run(capsys, "sweep", "--m", "4", "--grid", "4", "--out", str(tmp_path / f"{name}.csv"),
            "--svg", str(tmp_path / f"{name}.svg"))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_mc_validate_single_case(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "mc-validate", "--scheme", "asymmetric", "--m", "4", "--pump", "0.2", "--eta", "0.6",
                       "--gamma", "0.5", "--trials", "100000", "--seed", "3", "--out", str(report))
    assert code == 0 and "1/1 cases pass" in out
    assert json.loads(report.read_text())["cases"][0]["ok"] is True


def test_mc_validate_failure_exit_3(capsys, monkeypatch):
    bad = CaseReport({"scheme": "faint_laser", "pump": 1.0}, 1.0, 1.0, (Discrepancy("n", 0, 0.5, 0.1, 1e-4),))
    monkeypatch.setattr(cli, "validate_case", lambda *a, **k: bad)
    code, out, _ = run(capsys, "mc-validate", "--scheme", "fl", "--pump", "1", "--trials", "10")
    assert code == 3 and out.startswith("FAIL")


def test_reproduce_refuses_without_disk_headroom(capsys, monkeypatch, tmp_path):
    Usage = namedtuple("Usage", "total used free")
    monkeypatch.setattr(shutil, "disk_usage", lambda p: Usage(10, 10, 0))
    code, _, err = run(capsys, "reproduce", "--out", str(tmp_path / "figs"))
    assert code == 4 and "GiB" in err


def test_unwritable_output_exit_4(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, _ = run(capsys, "dist", "--scheme", "fl", "--pump", "1", "--out", str(blocker / "sub" / "d.json"))
    assert code == 4
