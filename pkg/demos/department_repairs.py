"""Walk through the department example: no solution, two repairs, and the
answers each semantics gives for the boss query."""
from pathlib import Path

from xrepair import (
    chase, enumerate_source_repairs, exchange_as_repair_cqa, materialize_then_repair_cqa,
    parse_instance, parse_mapping, parse_query, xr_certain, xr_certain_via_cqa, xr_certain_via_dlp,
)

DATA = Path(__file__).resolve().parent.parent / "data" / "running_example"


def show(label, answers):
    print(f"  {label:<28}", sorted(tuple(v.value for v in t) for t in answers))


def main():
    m = parse_mapping((DATA / "mapping.xmap").read_text())
    src = parse_instance((DATA / "source.xinst").read_text(), m.source, source=True)
    q = parse_query((DATA / "boss.xq").read_text())

    r = chase(src, m)
    print("chase succeeds:", r.success, "| clash on", sorted(v.value for v in r.failure.values))

    rs = enumerate_source_repairs(src, m)
    for i, rep in enumerate(rs, 1):
        gone = sorted(f.args[1].value for f in src.facts - rep.facts)
        print(f"repair {i}: drops tasks {gone}")

    print("answers to", q.name)
    show("xr-certain (brute force)", xr_certain(q, src, m))
    show("xr-certain (cqa)", xr_certain_via_cqa(q, src, m))
    show("xr-certain (dlp)", xr_certain_via_dlp(q, src, m))
    show("materialize then repair", materialize_then_repair_cqa(q, src, m))
    show("exchange as repair", exchange_as_repair_cqa(q, src, m))


if __name__ == "__main__":
    main()
