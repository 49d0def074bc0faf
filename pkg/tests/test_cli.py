"""Command-line envelope, exit codes, and report post-processing."""

import json
import os
import xml.etree.ElementTree as ET

import pytest

from bsl import __version__
from bsl.cli import main


def run_json(tmp_path, name, argv):
    out = os.path.join(tmp_path, name)
    rc = main(argv + ["--out", out])
    doc = json.loads(open(out).read())
    return rc, doc, out


def test_catalog_text(capsys):
    assert main(["catalog"]) == 0
    out = capsys.readouterr().out
    for eid in ("trivial-s2", "hopf", "gm"):
        assert eid in out
    assert "[spectra unsupported]" in out
    gm_line = [ln for ln in out.splitlines() if ln.startswith("gm")][0]
    assert "cohomogeneity_one=false" in gm_line


def test_catalog_json(tmp_path):
    rc, doc, _ = run_json(tmp_path, "cat.json", ["catalog", "--format", "json"])
    assert rc == 0
    assert doc["schema"] == 1 and doc["tool"] == "bsl"
    assert doc["version"] == __version__
    assert doc["command"] == "catalog"
    assert [row["id"] for row in doc["result"]] == ["trivial-s2", "hopf", "gm"]
    assert doc["result"][2]["spectra_supported"] is False


def test_spectrum_envelope(tmp_path):
    rc, doc, _ = run_json(tmp_path, "spectrum.json",
                          ["spectrum", "--diagram", "trivial-s2", "--side", "M",
                           "--grid", "128", "--modes", "2", "--seed", "3"])
    assert rc == 0
    cfg = doc["config"]
    assert cfg["diagram"] == "trivial-s2" and cfg["side"] == "M"
    assert cfg["grid"] == 128 and cfg["modes"] == 2 and cfg["seed"] == 3
    assert "threads" in cfg
    modes = doc["result"]["modes"]
    assert len(modes) == 2
    assert abs(modes[0]["lambda"] - 2.0) <= 1e-4
    assert abs(modes[1]["lambda"] - 6.0) <= 1e-4
    assert modes[0]["err"] >= 0.0


def test_spectrum_csv(tmp_path):
    out = os.path.join(tmp_path, "spectrum.csv")
    rc = main(["spectrum", "--diagram", "hopf", "--grid", "128", "--modes", "3",
               "--format", "csv", "--out", out])
    assert rc == 0
    lines = open(out).read().strip().splitlines()
    assert lines[0] == "index,lambda,mult,err"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "1" and abs(float(first[1]) - 8.0) <= 1e-4


def test_spectrum_include_zero(tmp_path):
    rc, doc, _ = run_json(tmp_path, "z.json",
                          ["spectrum", "--diagram", "hopf", "--grid", "128",
                           "--modes", "1", "--include-zero"])
    assert rc == 0
    modes = doc["result"]["modes"]
    assert modes[0] == {"lambda": 0.0, "mult": 1, "err": 0.0}
    assert len(modes) == 2


def test_spectrum_profile_dump(tmp_path):
    prof = os.path.join(tmp_path, "prof.csv")
    rc, doc, _ = run_json(tmp_path, "s.json",
                          ["spectrum", "--diagram", "hopf", "--grid", "128",
                           "--modes", "1", "--dump-profile", prof])
    assert rc == 0
    assert open(prof).read().startswith("t,w,h\n")
    meta = json.loads(open(prof[:-4] + ".json").read())
    assert meta["side"] == "M" and meta["n"] == 128


def test_unsupported_diagram_exits_2(capsys):
    assert main(["spectrum", "--diagram", "gm", "--grid", "128"]) == 2


def test_bad_arguments_exit_2(capsys):
    assert main(["spectrum", "--diagram", "hopf", "--grid", "100"]) == 2
    assert main(["spectrum", "--diagram", "hopf", "--grid", "32"]) == 2
    assert main(["spectrum", "--diagram", "hopf", "--modes", "65"]) == 2
    assert main(["spectrum", "--diagram", "unknown"]) == 2
    assert main(["spectrum"]) == 2
    assert main([]) == 2


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_compare_verdict_and_expectations(tmp_path):
    rc, doc, _ = run_json(tmp_path, "cmp.json",
                          ["compare", "--diagram", "hopf", "--grid", "128",
                           "--modes", "2", "--expect", "isospectral"])
    assert rc == 0
    assert doc["result"]["isospectral"] is True
    assert doc["result"]["max_relgap"] <= 1e-8
    # a failed expectation still writes the report, then exits 4
    out = os.path.join(tmp_path, "cmp2.json")
    rc = main(["compare", "--diagram", "hopf", "--grid", "128", "--modes", "2",
               "--expect", "nonisospectral", "--out", out])
    assert rc == 4
    assert json.loads(open(out).read())["result"]["isospectral"] is True


def test_compare_tolerance_override(tmp_path):
    rc, doc, _ = run_json(tmp_path, "tol.json",
                          ["compare", "--diagram", "hopf", "--grid", "128",
                           "--modes", "1", "--tolerance", "1e-15"])
    assert rc == 0
    assert doc["result"]["tolerance"] == 1e-15
    assert doc["result"]["isospectral"] is False


def test_warp_command(tmp_path):
    rc, doc, _ = run_json(tmp_path, "warp.json",
                          ["warp", "--diagram", "hopf", "--grid", "256",
                           "--scales", "2.0", "--expect", "nonisospectral"])
    assert rc == 0
    rows = doc["result"]["reports"]
    assert [r["scale"] for r in rows] == [0.0, 2.0]
    assert rows[0]["broke_isospectrality"] is False
    assert rows[0]["lambda1_warped"] == rows[0]["lambda1_unwarped"]
    assert rows[1]["broke_isospectrality"] is True
    assert rows[1]["rhs"] == "undefined"
    assert rows[1]["audit"]["consistent"] == "undefined"
    assert doc["result"]["any_broke"] is True
    # the opposite expectation exits 4
    out = os.path.join(tmp_path, "warp2.json")
    rc = main(["warp", "--diagram", "hopf", "--grid", "256", "--scales", "2.0",
               "--expect", "isospectral", "--out", out])
    assert rc == 4


def test_warp_csv(tmp_path):
    out = os.path.join(tmp_path, "warp.csv")
    rc = main(["warp", "--diagram", "trivial-s2", "--grid", "128",
               "--scales", "0.5", "--format", "csv", "--out", out])
    assert rc == 0
    lines = open(out).read().strip().splitlines()
    assert lines[0] == "scale,lambda1_unwarped,lambda1_warped,lhs,rhs,broke"
    assert len(lines) == 3


def test_verify_payload(tmp_path):
    rc, doc, _ = run_json(tmp_path, "verify.json",
                          ["verify", "--diagram", "gm", "--samples", "100",
                           "--seed", "7"])
    assert rc == 0
    res = doc["result"]
    assert res["commute_residual"] <= 1e-12
    assert res["membership"]["bullet"] <= 1e-12
    assert res["membership"]["star"] <= 1e-12
    assert res["freeness"]["bullet_only_identity"] is True
    assert res["freeness"]["star_only_identity"] is True
    assert res["isotropy"]["all_equal"] is True
    assert isinstance(res["orbit_normalization"], str)


def test_plotdata_from_reports(tmp_path):
    _, _, spec = run_json(tmp_path, "s.json",
                          ["spectrum", "--diagram", "hopf", "--grid", "128",
                           "--modes", "3"])
    out = os.path.join(tmp_path, "s.plot.csv")
    svg = os.path.join(tmp_path, "s.svg")
    assert main(["plotdata", spec, "--out", out, "--svg", svg]) == 0
    lines = open(out).read().strip().splitlines()
    assert lines[0] == "index,lambda" and len(lines) == 4
    root = ET.fromstring(open(svg).read())
    assert root.tag.endswith("svg")
    assert any(child.tag.endswith("polyline") for child in root)

    _, _, cmp_path = run_json(tmp_path, "c.json",
                              ["compare", "--diagram", "hopf", "--grid", "128",
                               "--modes", "2"])
    out2 = os.path.join(tmp_path, "c.plot.csv")
    assert main(["plotdata", cmp_path, "--out", out2]) == 0
    assert open(out2).read().startswith("index,relgap\n")

    _, _, warp_path = run_json(tmp_path, "w.json",
                               ["warp", "--diagram", "trivial-s2",
                                "--grid", "128", "--scales", "0.5"])
    out3 = os.path.join(tmp_path, "w.plot.csv")
    assert main(["plotdata", warp_path, "--out", out3]) == 0
    assert open(out3).read().startswith("scale,lambda1_warped\n")


def test_plotdata_from_profile_csv(tmp_path):
    prof = os.path.join(tmp_path, "p.csv")
    main(["spectrum", "--diagram", "hopf", "--grid", "128", "--modes", "1",
          "--dump-profile", prof, "--out", os.path.join(tmp_path, "x.json")])
    out = os.path.join(tmp_path, "p.plot.csv")
    assert main(["plotdata", prof, "--out", out]) == 0
    assert open(out).read().startswith("t,w\n")


def test_plotdata_rejects_malformed_input(tmp_path, capsys):
    bad = os.path.join(tmp_path, "bad.json")
    open(bad, "w").write("{not json")
    assert main(["plotdata", bad]) == 5
    missing = os.path.join(tmp_path, "nope.json")
    assert main(["plotdata", missing]) == 5
    badcsv = os.path.join(tmp_path, "bad.csv")
    open(badcsv, "w").write("a,b\n1,2\n")
    assert main(["plotdata", badcsv]) == 5
    # verify reports hold no series
    _, _, vpath = run_json(tmp_path, "v.json",
                           ["verify", "--diagram", "hopf", "--samples", "10"])
    assert main(["plotdata", vpath]) == 5


def test_outputs_are_deterministic(tmp_path):
    argv = ["spectrum", "--diagram", "trivial-s2", "--grid", "128",
            "--modes", "2", "--out", os.path.join(tmp_path, "det.json")]
    assert main(list(argv)) == 0
    first = open(argv[-1], "rb").read()
    assert main(list(argv)) == 0
    assert open(argv[-1], "rb").read() == first


def test_threads_echoed_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("BSL_THREADS", "2")
    rc, doc, _ = run_json(tmp_path, "thr.json",
                          ["catalog", "--format", "json"])
    assert rc == 0
    assert doc["config"]["threads"] == 2
