import json

from mcmtop.cli import main
from mcmtop.order import graph_edges


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_dinf1(capsys):
    code, out, _ = run(capsys, "verify", "--ring", "Dinf-1", "--Nmax", "3")
    doc = json.loads(out)
    assert code == 0
    assert doc["verdict"] == "pass"
    assert any(f["fact"].startswith("Q+") for f in doc["facts"])
    table = {row["class"]: row["oracle"] for row in doc["multiplicity_table"]}
    assert table["Mminus[1]"] == 4 and table["R"] == 3


def test_verify_cusp_and_lifted(capsys):
    assert run(capsys, "verify", "--ring", "cusp")[0] == 0
    code, out, _ = run(capsys, "verify", "--ring", "Dinf-3", "--Nmax", "2", "--oracle-params", "1")
    assert code == 0
    assert json.loads(out)["mode"] == "modular"


def test_components(capsys):
    code, out, _ = run(capsys, "components", "--ring", "Ainf-1", "--d", "6")
    doc = json.loads(out)
    assert code == 0 and doc["generators"] == ["R^3"] and doc["coverage"] == "complete"
    code, out, _ = run(capsys, "components", "--ring", "Dinf-2", "--d", "7")
    doc = json.loads(out)
    assert doc["universe_size"] == 0 and doc["members"] == []


def test_closure_and_enumerate(capsys):
    code, out, _ = run(capsys, "closure", "--ring", "cusp", "--d", "4", "--generator", "R^2")
    assert code == 0 and len(json.loads(out)["members"]) == 3
    code, out, _ = run(capsys, "enumerate", "--ring", "cone", "--d", "6")
    assert json.loads(out)["count"] == 10


def test_output_is_byte_stable(capsys):
    a = run(capsys, "components", "--ring", "Dinf-1", "--d", "4", "--Nmax", "3")[1]
    b = run(capsys, "components", "--ring", "Dinf-1", "--d", "4", "--Nmax", "3")[1]
    assert a == b
    assert a == json.dumps(json.loads(a), sort_keys=True, indent=2) + "\n"


def test_oracle(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle", "--ring", "Dinf-1", "--class", "Mminus[1]")
    assert code == 0 and json.loads(out)["e"] == 4
    ident = tmp_path / "id.json"
    ident.write_text(json.dumps({"phi": [["1", "0"], ["0", "1"]]}))
    code, out, _ = run(capsys, "oracle", "--ring", "Dinf-1", str(ident))
    assert json.loads(out)["e"] == 0
    code, out, _ = run(capsys, "oracle", "--ring", "Dinf-3", "--class", "R")
    assert json.loads(out)["e"] == 2
    code, out, _ = run(capsys, "oracle", "--ring", "Dinf-1", "--class", "Mminus[1]", "--smax", "2")
    assert code == 1 and "smax" in json.loads(out)["advice"]


def test_export_dot(capsys, tmp_path):
    target = tmp_path / "g.dot"
    code, _, _ = run(capsys, "export", "--ring", "cusp", "--d", "4", "--format", "dot",
                     "--source", "R^2", "--out", str(target))
    assert code == 0
    text = target.read_text()
    assert text.startswith("digraph") and len(graph_edges(text)) == 2


def test_axioms(capsys):
    code, out, _ = run(capsys, "axioms", "--ring", "cusp", "--d", "4")
    assert code == 0 and json.loads(out)["verdict"] == "pass"


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"ring": "cusp", "d": 4, "n_max": 1}))
    code, out, _ = run(capsys, "closure", "--config", str(cfg), "--generator", "R^2")
    assert len(json.loads(out)["members"]) == 2
    code, out, _ = run(capsys, "closure", "--config", str(cfg), "--generator", "R^2", "--nmax", "2")
    assert len(json.loads(out)["members"]) == 3


def test_usage_errors(capsys):
    assert run(capsys, "verify", "--ring", "E8")[0] == 2
    assert run(capsys, "closure", "--ring", "cusp")[0] == 2
    assert run(capsys, "oracle", "--ring", "cusp", "--mode", "modular", "--prime", "7", "--class", "R")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "components", "--ring", "cusp", "--d", "4", "--Nmax", "0")[0] == 2
