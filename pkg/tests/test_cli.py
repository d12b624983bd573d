import io
import json
import subprocess
import sys

import pytest
from conftest import DATA

from xrepair import cli
from xrepair.textio import parse_instance, parse_mapping, parse_query

RUN = DATA / "running_example"
REACH = DATA / "reachability"


def run(*args):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main([str(a) for a in args], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_validate_running_example():
    code, out, _ = run("validate", RUN / "mapping.xmap")
    assert code == 0
    assert "class: GAV+egd" in out and "rank 0" in out


def test_validate_rejects_cycle(tmp_path):
    p = tmp_path / "cyc.xmap"
    p.write_text("source: R/2\ntarget: E/2\nst-tgd: R(x, y) -> E(x, y)\nt-tgd: E(x, y) -> E(y, z)\n")
    code, out, err = run("validate", p)
    assert code == 3
    assert "cycle E.2 -> E.2" in out and "not weakly acyclic" in err


def test_validate_json():
    code, out, _ = run("validate", REACH / "mapping.xmap", "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["class"] == "LAV+egd" and rep["all"]["max_rank"] == 1


def test_plain_certain_reports_no_solution():
    code, out, err = run("certain", RUN / "mapping.xmap", RUN / "source.xinst", RUN / "boss.xq")
    assert code == 2
    assert "boss: no solution" in out and "no solution" in err


def test_xr_certain_all_routes_agree():
    code, out, _ = run("xr-certain", RUN / "mapping.xmap", RUN / "source.xinst", RUN / "boss.xq", "--via", "all")
    assert code == 0
    lines = out.splitlines()
    assert lines == ['boss via brute: [["peter", "bobs"]]', 'boss via cqa: [["peter", "bobs"]]',
                     'boss via dlp: [["peter", "bobs"]]', "boss: AGREE"]


def test_xr_certain_json_schema():
    code, out, _ = run("xr-certain", RUN / "mapping.xmap", RUN / "source.xinst", RUN / "boss.xq",
                       "--via", "all", "--format", "json")
    rep = json.loads(out)
    assert rep["boss"]["verdict"] == "AGREE"
    assert rep["boss"]["routes"]["cqa"] == [["peter", "bobs"]]


def test_glav_input_skips_cqa_and_autocompiles():
    code, out, _ = run("xr-certain", REACH / "mapping.xmap", REACH / "source.xinst", REACH / "reachable.xq",
                       "--via", "all")
    assert code == 0
    assert "via cqa: skipped" in out and out.rstrip().endswith("AGREE")
    code, _, err = run("xr-certain", REACH / "mapping.xmap", REACH / "source.xinst", REACH / "reachable.xq",
                       "--via", "dlp", "--no-auto-compile")
    assert code == 3 and "compile" in err


def test_disagreement_exits_five(monkeypatch):
    real = cli._route

    def skewed(route, q, src, m, cfg):
        got = real(route, q, src, m, cfg)
        return set() if route == "dlp" else got

    monkeypatch.setattr(cli, "_route", skewed)
    code, out, _ = run("xr-certain", RUN / "mapping.xmap", RUN / "source.xinst", RUN / "boss.xq", "--via", "all")
    assert code == 5 and "DISAGREE" in out


def test_repairs_to_directory(tmp_path):
    code, out, _ = run("repairs", RUN / "mapping.xmap", RUN / "source.xinst", RUN / "boss.xq", "--out", tmp_path)
    assert code == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["repair_1.xinst", "repair_2.xinst", "summary.json"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["count"] == 2 and summary["source_facts"] == 7
    answers = [r["answers"]["boss"] for r in summary["repairs"]]
    assert all(["peter", "bobs"] in a for a in answers)
    m = parse_mapping((RUN / "mapping.xmap").read_text())
    sizes = sorted(len(parse_instance((tmp_path / f).read_text(), m.source)) for f in files[:2])
    assert sizes == [5, 6]


def test_repairs_text_listing():
    code, out, _ = run("repairs", RUN / "mapping.xmap", RUN / "source.xinst")
    assert code == 0 and out.startswith("2 source repair(s)")
    assert out.count("# dropped") == 3


def test_fact_cap_exits_four(monkeypatch):
    monkeypatch.setenv("XR_MAX_FACTS", "2")
    code, _, err = run("repairs", RUN / "mapping.xmap", RUN / "source.xinst")
    assert code == 4 and "cap" in err


def test_parse_error_exits_one(tmp_path):
    p = tmp_path / "bad.xmap"
    p.write_text("source: R/2\nst-tgd: R(x y) -> T(x)\n")
    code, _, err = run("validate", p)
    assert code == 1 and "line 2, col 13" in err
    code, _, err = run("validate", tmp_path / "missing.xmap")
    assert code == 1 and "cannot read" in err


def test_source_with_nulls_is_rejected(tmp_path):
    p = tmp_path / "src.xinst"
    p.write_text('Task_Assignments("peter", _N1, "exec").\n')
    code, _, _ = run("chase", RUN / "mapping.xmap", p)
    assert code == 1


def test_chase_writes_solution_and_log(tmp_path):
    p = tmp_path / "ok.xinst"
    p.write_text('R("a", "b").\nR("b", "c").\n')
    log = tmp_path / "steps.jsonl"
    code, out, _ = run("chase", REACH / "mapping.xmap", p, "--log", log, "--out", tmp_path)
    assert code == 0
    sol = (tmp_path / "solution.xinst").read_text()
    assert "_N" in sol
    assert all(json.loads(line)["kind"] in ("tgd", "egd") for line in log.read_text().splitlines())


def test_rewrite_cqa_outputs(tmp_path):
    code, _, _ = run("rewrite-cqa", RUN / "mapping.xmap", RUN / "boss.xq", "--out", tmp_path)
    assert code == 0
    q = parse_query((tmp_path / "rewritten.xq").read_text())
    assert {a.relation for d in q.disjuncts for a in d.body} == {"Task_Assignments", "Stakeholders_old"}
    assert "egd:" in (tmp_path / "source_egds.xcon").read_text()


def test_compile_gav_outputs(tmp_path):
    code, _, _ = run("compile-gav", REACH / "mapping.xmap", REACH / "reachable.xq", "--out", tmp_path)
    assert code == 0
    cm = parse_mapping((tmp_path / "compiled.xmap").read_text())
    assert len(cm.t) == 8
    prov = json.loads((tmp_path / "provenance.json").read_text())
    assert prov["bound"] == 1


def test_emit_dlp_with_facts(tmp_path):
    code, _, _ = run("emit-dlp", RUN / "mapping.xmap", RUN / "boss.xq", "--with-facts", RUN / "source.xinst",
                     "--out", tmp_path)
    assert code == 0
    text = (tmp_path / "program.dl").read_text()
    assert text.startswith("%") and 'stakeholders_old("meetbobs", "bobs").' in text


@pytest.mark.parametrize("args", [
    ("xr-certain", RUN / "mapping.xmap", RUN / "source.xinst", RUN / "boss.xq", "--via", "all"),
    ("compile-gav", REACH / "mapping.xmap", REACH / "reachable.xq"),
    ("emit-dlp", REACH / "mapping.xmap", REACH / "reachable.xq"),
    ("repairs", RUN / "mapping.xmap", RUN / "source.xinst", RUN / "boss.xq", "--format", "json"),
])
def test_repeated_runs_are_byte_identical(args):
    first = subprocess.run([sys.executable, "-m", "xrepair.cli", *map(str, args)], capture_output=True)
    second = subprocess.run([sys.executable, "-m", "xrepair.cli", *map(str, args)], capture_output=True)
    assert first.returncode == 0
    assert first.stdout == second.stdout and first.stdout
