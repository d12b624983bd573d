"""Compile the LAV reachability mapping with a key egd into plain GAV rules
and answer the shared-target query through the disjunctive program."""
from pathlib import Path

from xrepair import compile_to_gav, parse_instance, parse_mapping, parse_query, serialize_mapping, serialize_query
from xrepair import xr_certain, xr_certain_via_compile

DATA = Path(__file__).resolve().parent.parent / "data" / "reachability"


def main():
    m = parse_mapping((DATA / "mapping.xmap").read_text())
    src = parse_instance((DATA / "source.xinst").read_text(), m.source, source=True)
    q = parse_query((DATA / "reachable.xq").read_text())

    cm = compile_to_gav(m)
    print(f"stages: {', '.join(cm.stages)}")
    print(f"depth bound {cm.setting.bound}; {len(cm.mapping.st)} st and {len(cm.mapping.t)} target constraints")
    print(serialize_mapping(cm.mapping))
    print(serialize_query(cm.transform(q)))

    pairs = lambda s: sorted(tuple(v.value for v in t) for t in s)
    print("via compile:", pairs(xr_certain_via_compile(q, src, m)))
    print("brute force:", pairs(xr_certain(q, src, m)))


if __name__ == "__main__":
    main()
