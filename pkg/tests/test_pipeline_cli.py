import json

import numpy as np
import pytest

from pwscheme import cli
from pwscheme.pipeline import STAGES, ConfigError, RunConfig, run_pipeline
from pwscheme.scheme import save_scheme


@pytest.fixture(scope="module")
def scheme_file(lab3, tmp_path_factory):
    path = tmp_path_factory.mktemp("schemes") / "q3.json"
    save_scheme(lab3.scheme, path)
    return path


def test_full_run_q3():
    report, _ = run_pipeline(RunConfig(q=3))
    assert report.passed, report.text()
    assert [r.stage for r in report.records] == sorted((r.stage for r in report.records), key=STAGES.index)
    assert all(r.claim for r in report.records)


def test_selection_only_reports_selected():
    report, _ = run_pipeline(RunConfig(q=3, checks=["parameters", "lemma2"]))
    assert {r.stage for r in report.records} == {"parameters", "lemma2"}


def test_byte_identical_reports():
    a, _ = run_pipeline(RunConfig(q=3, checks=["parameters", "cliques"]))
    b, _ = run_pipeline(RunConfig(q=3, checks=["parameters", "cliques"]))
    assert a.dumps() == b.dumps()


@pytest.mark.parametrize("kwargs", [dict(q=4), dict(q=11), dict(q=7, q_bound=5), dict(mode="abstract"),
                                    dict(checks=["nope"]), dict(threads=0), dict(sample=0)])
def test_bad_configs(kwargs):
    with pytest.raises(ConfigError):
        RunConfig(**kwargs).validate()


def test_abstract_mode(scheme_file):
    report, _ = run_pipeline(RunConfig(q=None, mode="abstract", scheme_file=scheme_file))
    assert report.passed, report.text()
    assert report.get("natural_isomorphism") is None
    assert report.get("backtracking_isomorphism").passed


def test_corrupted_file_skips_downstream(lab3, tmp_path):
    doc = lab3.scheme.to_json()
    doc["relations"][5] = (doc["relations"][5] % 4) + 1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    report, _ = run_pipeline(RunConfig(q=None, mode="abstract", scheme_file=path))
    first = report.records[0]
    assert first.check == "scheme_axioms" and not first.passed and first.witness
    skipped = [r for r in report.records if r.check == "skipped"]
    assert {r.stage for r in skipped} == set(STAGES) - {"geometry", "parameters"}


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_pipeline_writes_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _, _ = run_cli(capsys, "pipeline", "--q", "3", "--json", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["format_version"] == 1 and doc["summary"]["pass"]
    assert all("elapsed" not in r for r in doc["records"])


def test_cli_triples(capsys):
    code, out, _ = run_cli(capsys, "triples", "--triple", "3,3,3", "--krein", "--symmetry", "--q", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["pinned"]["[1 3 3]"] == "0/1" and doc["pinned"]["[2 3 3]"] == "0/1"
    assert doc["triple"] == [3, 3, 3]


def test_cli_triples_q5_dependencies(capsys):
    code, out, _ = run_cli(capsys, "triples", "--triple", "3,3,3", "--krein", "--symmetry", "--q", "5")
    doc = json.loads(out)
    assert code == 0
    assert doc["before_nonnegativity"]["free"] == ["[3 3 3]", "[4 3 3]", "[4 4 3]", "[4 4 4]"]
    assert doc["pinned"]["[2 3 3]"] == "0/1"


@pytest.mark.parametrize("argv", [["build-gq", "--q", "4"], ["triples", "--triple", "3,3", "--q", "3"],
                                  ["triples", "--triple", "3,3,9", "--q", "3"], ["pipeline", "--q", "9"],
                                  ["load", "--file", "/nonexistent.json"], ["pipeline", "--checks", "bogus"],
                                  ["nonsense"]])
def test_cli_usage_errors(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_cli_build_gq(capsys):
    code, out, _ = run_cli(capsys, "build-gq", "--q", "3")
    doc = json.loads(out)
    assert code == 0 and len(doc["points"]) == 112 and len(doc["sub_lines"]) == 40


def test_cli_save_load_and_failure(tmp_path, capsys):
    path = tmp_path / "s.json"
    assert run_cli(capsys, "save", "--q", "3", "--file", str(path))[0] == 0
    assert run_cli(capsys, "load", "--file", str(path))[0] == 0
    doc = json.loads(path.read_text())
    rel = np.array(doc["relations"]).reshape(72, 72)
    rel[0, 1] = 4 if rel[0, 1] != 4 else 1
    doc["relations"] = rel.ravel().tolist()
    path.write_text(json.dumps(doc))
    report = tmp_path / "r.json"
    code, _, _ = run_cli(capsys, "verify-params", "--file", str(path), "--json", str(report))
    assert code == 1
    assert not json.loads(report.read_text())["summary"]["pass"]


def test_cli_cliques_emit(tmp_path, capsys):
    path = tmp_path / "c.json"
    code, _, _ = run_cli(capsys, "cliques", "--q", "3", "--emit-cliques", str(path))
    doc = json.loads(path.read_text())
    assert code == 0 and len(doc["cliques"]) == 240 and len(doc["partitions"]) == 40


def test_cli_reconstruct_out(tmp_path, capsys):
    path = tmp_path / "gq.json"
    code, _, _ = run_cli(capsys, "reconstruct", "--q", "3", "--out", str(path))
    doc = json.loads(path.read_text())
    assert code == 0 and doc["n_points"] == 112 and "tags" in doc


def test_cli_hypotheses_sampled(tmp_path, capsys):
    report = tmp_path / "h.json"
    code, _, _ = run_cli(capsys, "hypotheses", "--q", "3", "--sample", "4", "--seed", "2", "--json", str(report))
    rec = json.loads(report.read_text())["records"][0]
    assert code == 0 and rec["values"]["mode"] == "sampled" and rec["values"]["seed"] == 2
