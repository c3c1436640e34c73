"""Command-line front end: file formats, exit codes, determinism and plots."""
import json
import math
import re
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from bayesens.cli import main
from bayesens.cli import io as fio
from bayesens.data import Dataset, Grid, NormalPrior, PointMass, ValidationError
from bayesens.estimands import gformula_binary_l
from bayesens.estimands.sweep import SweepRow, SweepTable

SVG = "{http://www.w3.org/2000/svg}"
QUICK = ["--chains", "2", "--iter", "60", "--warmup", "60", "--seed", "5"]


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


def svg_classes(path):
    root = ET.parse(path).getroot()
    out = {}
    for el in root.iter():
        for c in (el.get("class") or "").split():
            out[c] = out.get(c, 0) + 1
    return root, out


def strip_timestamp(text):
    return re.sub(r'<metadata id="timestamp">[^<]*</metadata>\n', "", text)


# -- simulate -------------------------------------------------------------------------


def test_simulate_complete_header_consistency(work):
    assert run("simulate", "complete", "--seed", 3, "--out", "d.csv") == 0
    data = fio.read_dataset("d.csv")
    header = json.loads((work / "d.csv.json").read_text())
    assert data.n == 500
    p = header["dgp"]["params"]
    assert header["true_ate"] == gformula_binary_l(p["eta"], p["theta"])
    text = (work / "d.csv").read_text()
    assert text.startswith("# bayesens-dataset v1\n# dgp: ")
    assert "# true_ate: " in text


def test_simulate_mnar_binary_defaults(work):
    assert run("simulate", "mnar-binary", "--out", "m.csv") == 0
    header = json.loads((work / "m.csv.json").read_text())
    assert header["dgp"]["params"]["n"] == 1000
    data = fio.read_dataset("m.csv")
    assert data.n == 1000 and data.n_mis > 0
    # missing outcomes are empty fields, never sentinels
    assert any(line.split(",")[1] == "" for line in (work / "m.csv").read_text().splitlines() if line[:1] == "1")


def test_simulate_is_byte_identical(work):
    run("simulate", "unmeasured", "--seed", 9, "--out", "a.csv", "--param", "n=40")
    run("simulate", "unmeasured", "--seed", 9, "--out", "b.csv", "--param", "n=40")
    assert (work / "a.csv").read_bytes() == (work / "b.csv").read_bytes()


def test_simulate_unwritable_path(work, capsys):
    (work / "blocker").write_text("")
    assert run("simulate", "complete", "--out", "blocker/sub/d.csv") == 2
    assert "blocker" in capsys.readouterr().err


def test_simulate_bad_parameter(work, capsys):
    assert run("simulate", "complete", "--param", "theta=1.5") == 2
    assert "theta" in capsys.readouterr().err


# -- file formats ----------------------------------------------------------------------


def test_dataset_round_trip(work, rng):
    y = rng.normal(size=7)
    delta = np.array([0, 1, 0, 0, 1, 0, 0], dtype=float)
    d = Dataset(y=np.where(delta == 1, np.nan, y), a=rng.integers(0, 2, 7), l=rng.normal(size=7), delta=delta)
    fio.write_dataset("x.csv", d, {"dgp": {"k": 1}, "true_ate": 0.25, "other": 1})
    back = fio.read_dataset("x.csv")
    for c in ("y", "a", "l", "delta"):
        assert np.array_equal(getattr(back, c), getattr(d, c), equal_nan=True)
    assert back.meta["dgp"] == {"k": 1} and back.meta["true_ate"] == 0.25 and "other" not in back.meta


@pytest.mark.parametrize(
    "body,lineno",
    [
        ("delta,y,a,l\n0,1,0,1\n0,x,1,0\n", 4),
        ("delta,y,a,l\n0,1,0,1\n0,1,1\n", 4),
        ("delta,y,a,l\n0,1,0,1\n1,1,1,0\n", 4),
        ("delta,y,a,l\n0,,0,1\n", 3),
        ("y,a,l\n1,0,1\n", 2),
    ],
)
def test_dataset_parse_errors_carry_line_numbers(work, body, lineno):
    (work / "bad.csv").write_text("# bayesens-dataset v1\n" + body)
    with pytest.raises(fio.ParseError) as info:
        fio.read_dataset("bad.csv")
    assert info.value.lineno == lineno
    assert f"bad.csv:{lineno}:" in str(info.value)


def test_malformed_header_json(work):
    (work / "bad.csv").write_text("# bayesens-dataset v1\n# dgp: {oops\ndelta,y,a,l\n0,1,0,1\n")
    with pytest.raises(fio.ParseError) as info:
        fio.read_dataset("bad.csv")
    assert info.value.lineno == 2


def test_parse_range_inclusive():
    assert fio.parse_range("0:1:0.25").values == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert fio.parse_range("-1:-0.4:0.3").values == (-1.0, -0.7, -0.4)
    for bad in ("0:1", "1:0:0.5", "0:1:0", "a:b:c"):
        with pytest.raises(ValidationError):
            fio.parse_range(bad)


@pytest.mark.parametrize(
    "value,expected",
    [
        (0.5, PointMass(0.5)),
        ("0.5", PointMass(0.5)),
        ({"point": 2}, PointMass(2.0)),
        ("normal(0, 1)", NormalPrior(0.0, 1.0)),
        ({"normal": [1, 2]}, NormalPrior(1.0, 2.0)),
        ([0, 1], Grid((0.0, 1.0))),
        ({"grid": "0:1:0.5"}, Grid((0.0, 0.5, 1.0))),
    ],
)
def test_parse_entry(value, expected):
    entry = fio.parse_entry(value)
    assert entry == expected
    assert fio.parse_entry(fio.entry_to_json(entry)) == entry


@pytest.mark.parametrize("value", [True, "normal(0)", "abc", {"beta": [1, 1]}])
def test_parse_entry_rejects(value):
    with pytest.raises(ValidationError):
        fio.parse_entry(value)


def test_number_formatting_round_trips(rng):
    for x in rng.normal(size=50) * 10.0 ** rng.integers(-8, 8, 50):
        assert float(fio.fmt(x)) == x
    assert fio.fmt(3.0) == "3" and fio.fmt(None) == "NA" and fio.fmt(math.nan) == "NA"


def make_table(uppers, errors=()):
    rows = []
    for i, u in enumerate(uppers):
        if i in errors:
            rows.append(SweepRow(index=i, values={"xi3": i * 0.25}, seed=i, error="SamplingError: failed"))
        else:
            rows.append(SweepRow(index=i, values={"xi3": i * 0.25}, seed=i, mean=u - 0.2, q025=u - 0.4, q975=u,
                                 max_rhat=1.001, min_ess=400.0, divergences=0))
    return SweepTable(model="mnar-binary", grid_names=["xi3"], rows=rows, base_seed=1, null_values={"xi3": 0.0})


def test_sweep_table_round_trip(work):
    t = make_table([-0.2, -0.05, 0.03, 0.1], errors=(1,))
    fio.write_sweep("t.csv", t, {"model": "mnar-binary"})
    back = fio.read_sweep("t.csv")
    assert back.rows == t.rows
    assert back.grid_names == ["xi3"] and back.null_values == {"xi3": 0.0}
    assert back.config == {"model": "mnar-binary"}


def test_sweep_table_parse_error(work):
    fio.write_sweep("t.csv", make_table([-0.2, 0.1]), {})
    lines = (work / "t.csv").read_text().splitlines()
    lines[-1] = lines[-1].replace(",0,", ",zero,", 1)
    (work / "t.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(fio.ParseError) as info:
        fio.read_sweep("t.csv")
    assert info.value.lineno == len(lines)


def test_json_parse_error_line(work):
    (work / "c.json").write_text('{\n  "model": "complete",\n  "data": \n}\n')
    with pytest.raises(fio.ParseError) as info:
        fio.read_json("c.json")
    assert info.value.lineno == 4


def test_atomic_write_leaves_no_temporaries(work):
    fio.atomic_write(work / "sub" / "f.txt", "hello\n")
    assert [p.name for p in (work / "sub").iterdir()] == ["f.txt"]


# -- fit, diagnostics ------------------------------------------------------------------


@pytest.fixture
def complete_csv(work):
    run("simulate", "complete", "--seed", 1, "--param", "n=120", "--out", "d.csv")
    return "d.csv"


def test_fit_bundle(work, complete_csv, capsys):
    assert run("fit", "--model", "complete", "--data", complete_csv, "--out", "f", *QUICK) == 0
    assert "ATE mean" in capsys.readouterr().out
    summ = fio.read_summary(work / "f" / "summary.csv")
    assert list(summ)[0] == "ATE"
    assert set(summ) == {"ATE", "eta[0]", "eta[1]", "eta[2]", "theta"}
    header = (work / "f" / "summary.csv").read_text().splitlines()
    assert header[0].startswith("# config: ")
    assert header[1] == "quantity,mean,sd,mcse,q2.5,q50,q97.5,ess,rhat"
    names, values, divergent, comments = fio.read_draws(work / "f" / "draws.csv")
    assert values.shape == (2, 60, 5) and divergent.shape == (2, 60)
    assert comments["config"]["sampler"]["seed"] == 5
    diag = json.loads((work / "f" / "diagnostics.json").read_text())
    assert {"divergences", "max_rhat", "min_ess", "quantities", "config"} <= set(diag)
    assert json.loads((work / "f" / "config.json").read_text())["model"] == "complete"


def test_fit_and_diagnostics_are_byte_identical(work, complete_csv):
    for out in ("a", "b"):
        assert run("fit", "--model", "complete", "--data", complete_csv, "--out", out, *QUICK) == 0
        assert run("diagnostics", out, "--out", f"{out}/diag2.json") == 0
    for name in ("summary.csv", "draws.csv", "diagnostics.json", "config.json", "diag2.json"):
        assert (work / "a" / name).read_bytes() == (work / "b" / name).read_bytes(), name


def test_fit_validates_before_sampling(work, capsys):
    run("simulate", "mnar-binary", "--param", "n=50", "--out", "m.csv")
    assert run("fit", "--model", "complete", "--data", "m.csv", "--out", "f", *QUICK) == 2
    assert "mnar-binary" in capsys.readouterr().err
    assert not (work / "f").exists()


def test_fit_rejects_unknown_model(work, complete_csv):
    with pytest.raises(SystemExit) as info:
        run("fit", "--model", "probit", "--data", complete_csv)
    assert info.value.code == 2


def test_fit_rejects_foreign_sensitivity_name(work, complete_csv, capsys):
    assert run("fit", "--model", "complete", "--data", complete_csv, "--set", "xi3=1", *QUICK) == 2
    assert "xi3" in capsys.readouterr().err


def test_fit_rejects_grid(work, complete_csv):
    run("simulate", "misclassification", "--param", "n=40", "--out", "x.csv")
    assert run("fit", "--model", "misclassification", "--data", "x.csv", "--grid", "xi1=0.8:0.9:0.1", *QUICK) == 2


def test_missing_dataset_file(work, capsys):
    assert run("fit", "--model", "complete", "--data", "nothere.csv") == 2
    assert "nothere.csv" in capsys.readouterr().err


def test_config_file_with_flag_override(work, complete_csv):
    cfg = {
        "model": "misclassification",
        "data": complete_csv,
        "sensitivity": {"xi1": 0.95, "xi2": {"point": 0.05}},
        "sampler": {"chains": 3, "iterations": 40, "warmup": 40, "seed": 2},
        "output": {"dir": "out", "plot": False},
    }
    (work / "run.json").write_text(json.dumps(cfg))
    assert run("fit", "--config", "run.json", "--chains", 2) == 0
    used = json.loads((work / "out" / "config.json").read_text())
    assert used["sampler"]["chains"] == 2 and used["sampler"]["iterations"] == 40
    assert used["sensitivity"] == {"xi1": 0.95, "xi2": 0.05}


@pytest.mark.parametrize(
    "cfg",
    [{"model": "complete", "data": "d.csv", "extra": 1}, {"model": "complete", "data": "d.csv", "sampler": {"chain": 2}},
     {"model": "complete", "data": "d.csv", "sampler": {"target_accept": 1.5}}],
)
def test_bad_config(work, complete_csv, cfg):
    (work / "run.json").write_text(json.dumps(cfg))
    assert run("fit", "--config", "run.json") == 2


def test_prior_flag(work):
    run("simulate", "mnar-binary", "--param", "n=80", "--param", "xi0=0", "--out", "m.csv")
    assert run("fit", "--model", "mnar-binary", "--data", "m.csv", "--prior", "xi3=normal(0,1)", "--out", "f", *QUICK) == 0
    summ = fio.read_summary(work / "f" / "summary.csv")
    assert "xi3" in summ
    assert run("fit", "--model", "mnar-binary", "--data", "m.csv", "--prior", "xi3=0.5", *QUICK) == 2


# -- sweep, tipping, plot -----------------------------------------------------------------


@pytest.fixture
def mnar_csv(work):
    run("simulate", "mnar-binary", "--param", "n=150", "--param", "xi0=0", "--seed", 2, "--out", "m.csv")
    return "m.csv"


def test_sweep_curve_and_determinism(work, mnar_csv):
    args = ["sweep", "--model", "mnar-binary", "--data", mnar_csv, "--grid", "xi3=0:1:0.5", *QUICK]
    assert run(*args, "--out", "s1", "--no-timestamp") == 0
    assert run(*args, "--out", "s2", "--no-timestamp") == 0
    assert run(*args, "--out", "s3") == 0
    for name in ("sweep.csv", "config.json", "sweep.svg"):
        assert (work / "s1" / name).read_bytes() == (work / "s2" / name).read_bytes()
    t1 = (work / "s1" / "sweep.svg").read_text()
    t3 = (work / "s3" / "sweep.svg").read_text()
    assert t1 != t3 and strip_timestamp(t3) == t1
    table = fio.read_sweep(work / "s1" / "sweep.csv")
    assert [r.values["xi3"] for r in table.rows] == [0.0, 0.5, 1.0]
    root, classes = svg_classes(work / "s1" / "sweep.svg")
    assert classes["point"] == 3 and classes["band"] == 1 and classes["mean"] == 1
    assert root.find(f"{SVG}metadata[@id='config']") is not None


def test_sweep_rows_reproducible_by_single_fit(work, mnar_csv):
    assert run("sweep", "--model", "mnar-binary", "--data", mnar_csv, "--grid", "xi3=0:1:1", "--out", "s", "--no-plot", *QUICK) == 0
    table = fio.read_sweep(work / "s" / "sweep.csv")
    row = table.rows[1]
    args = ["fit", "--model", "mnar-binary", "--data", mnar_csv, "--set", "xi3=1", "--out", "f", "--no-plot",
            "--chains", "2", "--iter", "60", "--warmup", "60", "--seed", row.seed]
    assert run(*args) == 0
    ate = fio.read_summary(work / "f" / "summary.csv")["ATE"]
    assert ate["mean"] == row.mean and ate["q97.5"] == row.q975


def test_sweep_heatmap(work):
    run("simulate", "unmeasured", "--param", "n=60", "--out", "u.csv")
    assert run("sweep", "--model", "unmeasured", "--data", "u.csv", "--grid", "xi1=-1:0:1", "--grid", "xi2=[0,1]",
               "--out", "h", "--no-timestamp", *QUICK) == 0
    _, classes = svg_classes(work / "h" / "heatmap.svg")
    assert classes["cell"] == 4


def test_sweep_partial_failure_exit_code(work, complete_csv, capsys):
    code = run("sweep", "--model", "misclassification", "--data", complete_csv, "--grid", "xi1=[0.9,1.0]",
               "--out", "p", "--no-plot", *QUICK)
    assert code == 4
    assert "FAILED" in capsys.readouterr().out
    table = fio.read_sweep(work / "p" / "sweep.csv")
    assert table.rows[0].ok and not table.rows[1].ok


def test_sweep_total_failure_exit_code(work, complete_csv):
    (work / "run.json").write_text(json.dumps({"sampler": {"max_leapfrog": 1}}))
    code = run("sweep", "--config", "run.json", "--model", "misclassification", "--data", complete_csv,
               "--grid", "xi1=[0.8,0.9]", "--out", "p", "--no-plot", *QUICK)
    assert code == 3


def test_sweep_without_grid(work, complete_csv):
    assert run("sweep", "--model", "complete", "--data", complete_csv) == 2


def test_tipping_reports(work, capsys):
    fio.write_sweep("t.csv", make_table([-0.2, -0.05, 0.03, 0.1]), {"model": "mnar-binary"})
    assert run("tipping", "t.csv") == 0
    assert "xi3=0.5" in capsys.readouterr().out
    report = json.loads((work / "t.csv.tipping.json").read_text())
    assert report["tipping"][0]["index"] == 2 and report["config"] == {"model": "mnar-binary"}

    fio.write_sweep("n.csv", make_table([-0.3, -0.2]), {})
    assert run("tipping", "n.csv") == 0
    assert capsys.readouterr().out.strip() == "none"

    fio.write_sweep("e.csv", make_table([-0.2, 0.5, 0.1], errors=(1,)), {})
    assert run("tipping", "e.csv", "--out", "e.json") == 0
    cap = capsys.readouterr()
    assert "warning" in cap.err and "xi3=0.5" in cap.out
    assert json.loads((work / "e.json").read_text())["skipped"] == [1]


def test_tipping_is_byte_identical(work):
    fio.write_sweep("t.csv", make_table([-0.2, -0.05, 0.03, 0.1]), {})
    run("tipping", "t.csv", "--out", "a.json")
    run("tipping", "t.csv", "--out", "b.json")
    assert (work / "a.json").read_bytes() == (work / "b.json").read_bytes()


def test_tipping_malformed_table(work, capsys):
    fio.write_sweep("t.csv", make_table([-0.2, 0.1]), {})
    text = (work / "t.csv").read_text().rstrip("\n") + "\n7,0.5,1\n"
    (work / "t.csv").write_text(text)
    assert run("tipping", "t.csv") == 2
    assert f"t.csv:{len(text.splitlines())}:" in capsys.readouterr().err


def test_plot_from_table(work):
    fio.write_sweep("t.csv", make_table([-0.2, -0.05, 0.03, 0.1]), {"seed": 1})
    assert run("plot", "t.csv", "--kind", "curve", "--no-timestamp") == 0
    _, classes = svg_classes(work / "t.curve.svg")
    assert classes["point"] == 4
    assert run("plot", "t.csv", "--kind", "heatmap") == 2
    with pytest.raises(SystemExit):
        run("plot", "t.csv", "--kind", "pie")


def test_tsb_regression_plot(work):
    run("simulate", "mnar-continuous", "--param", "n=40", "--seed", 1, "--out", "c.csv")
    args = ["fit", "--model", "tsb-mnar", "--data", "c.csv", "--option", "K=2", "--option", "n_mc=20",
            "--chains", "1", "--iter", "30", "--warmup", "30", "--seed", "3", "--out", "t"]
    assert run(*args) == 0
    root, classes = svg_classes(work / "t" / "regression.svg")
    means = [el for el in root.iter() if "mean-curve" in (el.get("class") or "")]
    assert len(means) == 2
    assert {c for c in classes if c.startswith("arm-")} == {"arm-0", "arm-1"}
    assert classes["mis"] == fio.read_dataset("c.csv").n_mis
    assert run("plot", "t", "--kind", "regression", "--out", "r.svg") == 0
    assert run("fit", "--model", "tsb-mnar", "--data", "c.csv", "--option", "L=2", *QUICK) == 2


def test_regression_plot_needs_tsb_fit(work, complete_csv):
    run("fit", "--model", "complete", "--data", complete_csv, "--out", "f", *QUICK)
    assert run("plot", "f", "--kind", "regression") == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "bayesens", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("simulate", "fit", "sweep", "tipping", "plot", "diagnostics"):
        assert cmd in out.stdout


@pytest.mark.slow
def test_mnar_sweep_lower_bound_crosses_zero_inside_grid(work, capsys):
    # treated responders go missing more often (xi3 > 0), hiding a positive effect
    # under MAR; population-level estimates along the grid put the lower bound
    # crossing near xi3 = 0.4
    run("simulate", "mnar-binary", "--seed", 21, "--param", "n=2000", "--param", "eta=[-0.5,0.8,1.0]",
        "--param", "xi0=0.5", "--param", "xi3=1.25", "--out", "d.csv")
    assert run("sweep", "--model", "mnar-binary", "--data", "d.csv", "--grid", "xi3=0:1:0.25", "--seed", 22,
               "--chains", 4, "--warmup", 500, "--iter", 500, "--out", "s", "--no-plot") == 0
    table = fio.read_sweep(work / "s" / "sweep.csv")
    assert len(table.rows) == 5
    lower = [r.q025 for r in table.rows]
    assert lower[0] < 0.0 < lower[-1]
    capsys.readouterr()
    assert run("tipping", "s/sweep.csv", "--bound", "lower") == 0
    report = json.loads((work / "s" / "sweep.csv.tipping.json").read_text())
    assert 0 < report["tipping"][0]["index"] < 4
