import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from finsler_product.cli import build_metric, main, parse_config
from finsler_product.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


def strip_metadata(text):
    doc = json.loads(text)
    doc.pop("metadata")
    return doc


def test_validate_euclidean(tmp_path, capsys):
    cfg = write(tmp_path, {"metric": {"kind": "euclidean", "dim": 2}, "sampler": {"count": 10}})
    code, out, _ = run(["validate", "--config", cfg], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] and doc["min_eigenvalue"] == pytest.approx(2.0)
    assert "metadata" in doc


def test_validate_randers_failure(capsys):
    code, out, err = run(["validate", "--config", str(CONFIGS / "randers_invalid.json"), "--samples", "20"], capsys)
    assert code == 1
    assert json.loads(out)["failures"]
    assert "positive_definite" in err


def test_malformed_json(tmp_path, capsys):
    code, _, err = run(["validate", "--config", write(tmp_path, "{oops")], capsys)
    assert code == 2
    assert "invalid JSON at line 1" in err


@pytest.mark.parametrize("doc", [
    {"metric": {"kind": "euclidean", "dim": 2}, "bogus": 1},
    {"metric": {"kind": "euclidean", "dim": 2, "colour": "red"}},
    {"metric": {"kind": "warp"}},
    {"metric": {"kind": "euclidean", "dim": 2}, "sampler": {"count": 0}},
    {"metric": {"kind": "euclidean", "dim": 2}, "tolerances": {"hessian_blocks": -1}},
    {"metric": {"kind": "euclidean", "dim": 2}, "tolerances": {"unknown_check": 1e-3}},
    {"metric": {"kind": "custom", "dim": 2, "G": "y1^2 + + y2^2"}},
    {"metric": {"kind": "product", "factor1": {"kind": "sphere"}, "factor2": {"kind": "sphere"},
                "f": {"kind": "pnorm", "q": 2}}},
])
def test_config_errors_exit_2(tmp_path, capsys, doc):
    code, _, err = run(["classify", "--config", write(tmp_path, doc)], capsys)
    assert code == 2, err
    assert "config error" in err


def test_missing_config_file(capsys):
    assert run(["classify", "--config", "/nonexistent/x.json"], capsys)[0] == 2


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 2
    assert run(["classify"], capsys)[0] == 2
    assert run(["classify", "--config", "x", "--format", "xml"], capsys)[0] == 2
    assert run(["classify", "--config", "x", "--tol", "0"], capsys)[0] == 2


def test_tensors_sphere_point(capsys):
    cfg = str(CONFIGS / "sphere.json")
    code, out, _ = run(["tensors", "--config", cfg, "--x", "0.785398163,0", "--y", "1,1"], capsys)
    assert code == 0
    doc = json.loads(out)
    spray = doc["tensors"]["spray"]
    assert spray["label"] == "G^a" and spray["shape"] == [2]
    assert spray["data"] == pytest.approx([-0.25, 1.0], abs=1e-8)
    assert doc["tensors"]["berwald_curv"]["shape"] == [2, 2, 2, 2]


def test_tensors_euclidean_zero(capsys):
    code, out, _ = run(["tensors", "--config", str(CONFIGS / "euclidean.json")], capsys)
    assert code == 0
    tensors = json.loads(out)["tensors"]
    for name in ("spray", "nconn", "berwald_conn", "berwald_curv", "landsberg", "mean_landsberg"):
        assert not any(v != 0 for v in _flatten(tensors[name]["data"])), name


def _flatten(x):
    if isinstance(x, list):
        for v in x:
            yield from _flatten(v)
    else:
        yield x


def test_tensors_degenerate_product_point(capsys):
    code, _, err = run(["tensors", "--config", str(CONFIGS / "product_degenerate_point.json")], capsys)
    assert code == 1
    assert "factor norm vanishes" in err


def test_tensors_needs_point(tmp_path, capsys):
    cfg = write(tmp_path, {"metric": {"kind": "euclidean", "dim": 2}})
    assert run(["tensors", "--config", cfg], capsys)[0] == 2
    assert run(["tensors", "--config", cfg, "--x", "0,0,0", "--y", "1,0,0"], capsys)[0] == 2


def test_classify_commands(capsys):
    code, out, _ = run(["classify", "--config", str(CONFIGS / "sphere.json"), "--samples", "10"], capsys)
    assert code == 0 and json.loads(out)["verdicts"]["berwald"]["holds"]
    code, out, _ = run(["classify", "--config", str(CONFIGS / "randers.json"), "--samples", "10"], capsys)
    v = json.loads(out)["verdicts"]
    assert code == 0 and not v["berwald"]["holds"] and not v["weakly_berwald"]["holds"]
    code, out, _ = run(["classify", "--config", str(CONFIGS / "mroot.json"), "--samples", "10"], capsys)
    assert code == 0 and all(x["holds"] for x in json.loads(out)["verdicts"].values())


def test_verify_product_commands(capsys, tmp_path):
    out_path = tmp_path / "r.json"
    code, _, _ = run(["verify-product", "--config", str(CONFIGS / "product_sum.json"),
                      "--samples", "20", "--out", str(out_path)], capsys)
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert len(doc["checks"]) == 17
    assert all(c["max_residual"] < 1e-10 for c in doc["checks"])
    code, _, _ = run(["verify-product", "--config", str(CONFIGS / "product_eps_sqrt.json"), "--samples", "20"], capsys)
    assert code == 0
    assert run(["verify-product", "--config", str(CONFIGS / "sphere.json")], capsys)[0] == 2


def test_verify_product_failure_exit_1(tmp_path, capsys):
    doc = json.loads((CONFIGS / "product_eps_sqrt.json").read_text())
    doc["tolerances"] = {"hessian_blocks": 1e-300}
    code, _, err = run(["verify-product", "--config", write(tmp_path, doc), "--samples", "5"], capsys)
    assert code == 1
    assert "hessian_blocks" in err


def test_csv_matches_json(tmp_path, capsys):
    cfg = str(CONFIGS / "product_pnorm.json")
    j, c = tmp_path / "r.json", tmp_path / "r.csv"
    assert main(["verify-product", "--config", cfg, "--samples", "5", "--out", str(j)]) == 0
    assert main(["verify-product", "--config", cfg, "--samples", "5", "--format", "csv", "--out", str(c)]) == 0
    rows = json.loads(j.read_text())["rows"]
    table = list(csv.DictReader(io.StringIO(c.read_text())))
    assert len(rows) == len(table)
    for r, t in zip(rows, table):
        assert (r["check"], str(r["sample"])) == (t["check"], t["sample"])
        assert float(t["residual"]) == r["residual"]
        assert t["residual"] == json.dumps(r["residual"])


def test_csv_for_tensors_and_validate(capsys):
    code, out, _ = run(["tensors", "--config", str(CONFIGS / "sphere.json"), "--format", "csv"], capsys)
    assert code == 0 and out.startswith("tensor,index,value\n")
    code, out, _ = run(["validate", "--config", str(CONFIGS / "sphere.json"), "--format", "csv", "--samples", "3"],
                       capsys)
    assert code == 0 and out.startswith("check,sample,residual\n")


def test_infinite_residuals_serialize(tmp_path, capsys):
    # the negative scaling leaves the domain, so the reversibility residual is inf
    doc = {"metric": {"kind": "custom", "dim": 1, "G": "exp(2*log(y1))"},
           "sampler": {"count": 3, "x_box": [[0, 1]]}}
    cfg = write(tmp_path, doc)
    code, out, _ = run(["validate", "--config", cfg], capsys)
    assert code == 0
    assert json.loads(out)["checks"]["reversible"]["max_residual"] == "inf"


def test_determinism_byte_identical(tmp_path):
    cfg = str(CONFIGS / "product_randers.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify-product", "--config", cfg, "--samples", "8", "--seed", "4", "--out", str(a)]) == 0
    assert main(["verify-product", "--config", cfg, "--samples", "8", "--seed", "4", "--out", str(b)]) == 0
    assert strip_metadata(a.read_text()) == strip_metadata(b.read_text())


def test_atomic_write_leaves_no_temp_files(tmp_path):
    out = tmp_path / "r.json"
    assert main(["classify", "--config", str(CONFIGS / "euclidean.json"), "--samples", "2", "--out", str(out)]) == 0
    assert [p.name for p in tmp_path.iterdir()] == ["r.json"]


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = parse_config(json.loads(path.read_text()), check_product=False)
    assert cfg.metric.dim >= 1


def test_every_family_has_a_shipped_config():
    kinds, fkinds = set(), set()
    for path in CONFIGS.glob("*.json"):
        m = json.loads(path.read_text())["metric"]
        kinds.add(m["kind"])
        if m["kind"] == "product":
            fkinds.add(m["f"]["kind"])
            kinds.update({m["factor1"]["kind"], m["factor2"]["kind"]})
    assert kinds >= {"euclidean", "sphere", "riemannian", "randers", "mroot", "custom", "product"}
    assert fkinds == {"sum", "pnorm", "eps_sqrt", "custom"}


def test_build_metric_round_trips_to_config():
    m = build_metric({"kind": "randers", "b": ["0", "0.3*sin(x1)"]})
    again = build_metric(m.to_config())
    assert again.text == m.text
    with pytest.raises(ConfigError):
        build_metric({"kind": "mroot"})


def test_catalog_subprocess():
    res = subprocess.run([sys.executable, "-m", "finsler_product", "--catalog"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "G = y1^2 + sin(x1)^2 * y2^2" in res.stdout
    assert "eps_sqrt" in res.stdout
