"""Command-line front end: ``xr <command> ...``.

Exit codes: 0 success, 1 parse or I/O error, 2 no solution, 3 class or
precondition error, 4 resource cap exceeded, 5 when ``xr-certain --via all``
finds routes that disagree.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import textio
from .chase import analyze_weak_acyclicity, chase
from .core import NO_SOLUTION, mapping_class
from .errors import ParseError, PreconditionError, ResourceError, SchemaError, XRError

ROUTES = ("brute", "cqa", "dlp")


@dataclass
class RunConfig:
    command: str
    mapping: Path | None = None
    source: Path | None = None
    query: Path | None = None
    via: str = "brute"
    auto_compile: bool = True
    max_facts: int | None = None
    max_depth: int | None = None
    jobs: int = 1
    out: Path | None = None
    fmt: str = "text"
    log: Path | None = None
    extra: dict = field(default_factory=dict)


class NoSolution(XRError):
    pass


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None


def _load_mapping(cfg):
    m = textio.parse_mapping(_read(cfg.mapping))
    m.validate()
    return m


def _load_source(cfg, m):
    return textio.parse_instance(_read(cfg.source), m.source, source=True)


def _load_queries(cfg):
    if cfg.query is None:
        return []
    return list(textio.parse_queries(_read(cfg.query)).values())


class _Output:
    """Collects named outputs; writes them into --out or prints them in order."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.chunks = []

    def put(self, name, text):
        if not text.endswith("\n"):
            text += "\n"
        self.chunks.append((name, text))

    def say(self, text):
        self.chunks.append((None, text if text.endswith("\n") else text + "\n"))

    def flush(self, stream):
        out = self.cfg.out
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
        for name, text in self.chunks:
            if name is not None and out is not None:
                (out / name).write_text(text)
                stream.write(f"wrote {out / name}\n")
            else:
                if name is not None and self.cfg.fmt == "text":
                    stream.write(f"# {name}\n")
                stream.write(text)


def _graph_report(constraints):
    g = analyze_weak_acyclicity(constraints)
    rep = {"weakly_acyclic": g.weakly_acyclic}
    if g.weakly_acyclic:
        rep["max_rank"] = g.max_rank
        rep["ranks"] = {f"{r}.{i}": k for (r, i), k in sorted(g.rank.items())}
    else:
        rep["cycle"] = [f"{r}.{i}" for r, i in g.cycle_witness()]
    return rep


def cmd_validate(cfg, out):
    m = _load_mapping(cfg)
    cls = mapping_class(m)
    rep = {"class": cls["name"],
           "target": _graph_report(m.target_tgds),
           "all": _graph_report([c for c in list(m.st) + list(m.t)
                                 if c not in m.egds])}
    if cfg.fmt == "json":
        out.say(json.dumps(rep, indent=2, sort_keys=True))
    else:
        lines = [f"class: {cls['name']}"]
        for label, key in (("target tgds", "target"), ("all tgds", "all")):
            r = rep[key]
            if r["weakly_acyclic"]:
                lines.append(f"{label}: weakly acyclic, rank {r['max_rank']}")
            else:
                lines.append(f"{label}: NOT weakly acyclic, cycle " + " -> ".join(r["cycle"]))
        out.say("\n".join(lines))
    if not rep["target"]["weakly_acyclic"]:
        raise PreconditionError("target tgds are not weakly acyclic")


def cmd_chase(cfg, out):
    m = _load_mapping(cfg)
    src = _load_source(cfg, m)
    r = chase(src, m, log=cfg.log is not None)
    if cfg.log is not None:
        cfg.log.write_text(r.log_jsonl())
    if not r.success:
        raise NoSolution(f"no solution: {r.failure}")
    out.put("solution.xinst", textio.serialize_instance(r.target))


def cmd_repairs(cfg, out):
    from .core import eval_ucq_nullfree
    from .repair import enumerate_source_repairs
    m = _load_mapping(cfg)
    src = _load_source(cfg, m)
    qs = _load_queries(cfg)
    rs = enumerate_source_repairs(src, m, cfg.max_facts, cfg.jobs)
    summary = {"count": len(rs), "source_facts": len(src), "repairs": []}
    if cfg.fmt == "text" and cfg.out is None:
        out.say(f"{len(rs)} source repair(s)")
    for k, (r, j) in enumerate(zip(rs.repairs, rs.solutions), start=1):
        dropped = sorted(src.difference(r), key=lambda f: f.sort_key())
        entry = {"file": f"repair_{k}.xinst", "size": len(r), "dropped": [str(f) for f in dropped]}
        if qs:
            entry["answers"] = {q.name: textio.answers_to_json(eval_ucq_nullfree(q, j)) for q in qs}
        summary["repairs"].append(entry)
        if cfg.fmt == "text" or cfg.out is not None:
            out.put(entry["file"], "".join(f"# dropped {f}\n" for f in dropped)
                    + textio.serialize_instance(r))
    if cfg.fmt == "json" or cfg.out is not None:
        out.put("summary.json", json.dumps(summary, indent=2, sort_keys=True))


def cmd_certain(cfg, out):
    from .chase import certain_answers
    m = _load_mapping(cfg)
    src = _load_source(cfg, m)
    failed = False
    res = {}
    for q in _load_queries(cfg):
        ans = certain_answers(q, src, m)
        if ans is NO_SOLUTION:
            failed = True
            res[q.name] = None
        else:
            res[q.name] = textio.answers_to_json(ans)
    if cfg.fmt == "json":
        out.say(json.dumps(res, sort_keys=True))
    else:
        for name, a in res.items():
            out.say(f"{name}: " + ("no solution" if a is None else json.dumps(a)))
    if failed:
        raise NoSolution("no solution: the source instance violates the mapping")


def _route(route, q, src, m, cfg):
    if route == "brute":
        from .repair import xr_certain
        return xr_certain(q, src, m, cfg.max_facts, cfg.jobs)
    if route == "cqa":
        from .unfold import xr_certain_via_cqa
        return xr_certain_via_cqa(q, src, m)
    from .dlp import build_dlp, xr_certain_via_dlp
    try:
        build_dlp(m)
    except PreconditionError:
        if not cfg.auto_compile:
            raise
        from .compile import xr_certain_via_compile
        return xr_certain_via_compile(q, src, m, cfg.max_facts, bound=cfg.max_depth)
    return xr_certain_via_dlp(q, src, m, cfg.max_facts)


def cmd_xr_certain(cfg, out):
    m = _load_mapping(cfg)
    src = _load_source(cfg, m)
    routes = ROUTES if cfg.via == "all" else (cfg.via,)
    report = {}
    for q in _load_queries(cfg):
        got = {}
        for r in routes:
            try:
                got[r] = textio.answers_to_json(_route(r, q, src, m, cfg))
            except PreconditionError as e:
                if cfg.via != "all":
                    raise
                got[r] = {"skipped": str(e)}
        ran = [v for v in got.values() if isinstance(v, list)]
        entry = {"routes": got}
        if cfg.via == "all":
            entry["verdict"] = "AGREE" if all(v == ran[0] for v in ran) else "DISAGREE"
        report[q.name] = entry
    if cfg.fmt == "json":
        out.say(json.dumps(report, indent=2, sort_keys=True))
    else:
        for name, entry in report.items():
            for r, v in entry["routes"].items():
                shown = json.dumps(v) if isinstance(v, list) else "skipped: " + v["skipped"]
                out.say(f"{name} via {r}: {shown}")
            if "verdict" in entry:
                out.say(f"{name}: {entry['verdict']}")
    if any(e.get("verdict") == "DISAGREE" for e in report.values()):
        return 5
    return 0


def cmd_rewrite_cqa(cfg, out):
    from .unfold import source_rewriting
    m = _load_mapping(cfg)
    rw = source_rewriting(m)
    out.put("source_egds.xcon", textio.serialize_constraints(m.source, rw.egds))
    qs = _load_queries(cfg)
    if qs:
        out.put("rewritten.xq", "".join(textio.serialize_query(rw.rewrite(q)) for q in qs))


def _compiled(cfg, m):
    from .compile import compile_to_gav
    return compile_to_gav(m, prune=not cfg.extra.get("no_prune"), bound=cfg.max_depth)


def cmd_compile_gav(cfg, out):
    m = _load_mapping(cfg)
    cm = _compiled(cfg, m)
    out.put("compiled.xmap", textio.serialize_mapping(cm.mapping))
    qs = _load_queries(cfg)
    if qs:
        out.put("compiled.xq", "".join(textio.serialize_query(cm.transform(q)) for q in qs))
    out.put("provenance.json", cm.provenance_json())


def cmd_emit_dlp(cfg, out):
    from .dlp import build_dlp, export_dlp_text
    m = _load_mapping(cfg)
    qs = _load_queries(cfg)
    if len(qs) > 1:
        raise PreconditionError("emit-dlp takes a single query")
    q = qs[0] if qs else None
    try:
        art = build_dlp(m, q)
    except PreconditionError:
        if not cfg.auto_compile:
            raise
        cm = _compiled(cfg, m)
        q = cm.transform(q) if q is not None else None
        m = cm.mapping
        art = build_dlp(m, q)
    facts = _load_source(cfg, m) if cfg.source is not None else None
    out.put("program.dl", export_dlp_text(art, facts))


COMMANDS = {
    "validate": cmd_validate,
    "chase": cmd_chase,
    "repairs": cmd_repairs,
    "certain": cmd_certain,
    "xr-certain": cmd_xr_certain,
    "rewrite-cqa": cmd_rewrite_cqa,
    "compile-gav": cmd_compile_gav,
    "emit-dlp": cmd_emit_dlp,
}


def build_parser():
    p = argparse.ArgumentParser(prog="xr", description="Exchange-repair semantics for schema mappings.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, source=False, query=False, optional_source=False):
        sp.add_argument("mapping", type=Path)
        if source:
            sp.add_argument("source", type=Path)
        if query:
            sp.add_argument("query", type=Path, nargs=None if source else "?")
        if optional_source:
            sp.add_argument("--with-facts", dest="source", type=Path, metavar="SOURCE",
                            help="append the facts of this source instance")
        sp.add_argument("--out", type=Path, help="write outputs into this directory")
        sp.add_argument("--format", dest="fmt", choices=("text", "json"), default="text")
        return sp

    common(sub.add_parser("validate", help="mapping class and weak acyclicity"))
    sp = common(sub.add_parser("chase", help="chase a source instance"), source=True)
    sp.add_argument("--log", type=Path, help="write the chase steps as JSON lines")
    sp = common(sub.add_parser("repairs", help="enumerate source repairs"), source=True)
    sp.add_argument("query", type=Path, nargs="?", help="also report answers on each repair")
    sp.add_argument("--max-facts", type=int)
    sp.add_argument("--jobs", type=int, default=1)
    common(sub.add_parser("certain", help="plain certain answers"), source=True, query=True)
    sp = common(sub.add_parser("xr-certain", help="XR-certain answers"), source=True, query=True)
    sp.add_argument("--via", choices=ROUTES + ("all",), default="brute")
    sp.add_argument("--no-auto-compile", action="store_true")
    sp.add_argument("--max-facts", type=int)
    sp.add_argument("--max-depth", type=int, help="override the skeleton depth bound")
    sp.add_argument("--jobs", type=int, default=1)
    common(sub.add_parser("rewrite-cqa", help="unfold a GAV+egd mapping onto the source"), query=True)
    sp = common(sub.add_parser("compile-gav", help="compile to GAV+GAV+egd"), query=True)
    sp.add_argument("--max-depth", type=int, help="override the skeleton depth bound")
    sp.add_argument("--no-prune", action="store_true", help="keep every skeleton relation")
    sp = common(sub.add_parser("emit-dlp", help="export the disjunctive program"),
                query=True, optional_source=True)
    sp.add_argument("--no-auto-compile", action="store_true")
    sp.add_argument("--max-depth", type=int)
    return p


def config_from_args(ns) -> RunConfig:
    cfg = RunConfig(command=ns.command, mapping=ns.mapping, fmt=ns.fmt, out=ns.out)
    for name in ("source", "query", "via", "max_facts", "max_depth", "jobs", "log"):
        if getattr(ns, name, None) is not None:
            setattr(cfg, name, getattr(ns, name))
    cfg.auto_compile = not getattr(ns, "no_auto_compile", False)
    cfg.extra["no_prune"] = getattr(ns, "no_prune", False)
    return cfg


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ns = build_parser().parse_args(argv)
    cfg = config_from_args(ns)
    out = _Output(cfg)
    code = 0
    try:
        code = COMMANDS[cfg.command](cfg, out) or 0
    except NoSolution as e:
        out.flush(stdout)
        stderr.write(f"xr: {e}\n")
        return 2
    except (ParseError, OSError) as e:
        stderr.write(f"xr: {e}\n")
        return 1
    except (PreconditionError, SchemaError) as e:
        out.flush(stdout)
        stderr.write(f"xr: {e}\n")
        return 3
    except ResourceError as e:
        stderr.write(f"xr: {e}\n")
        return 4
    out.flush(stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
