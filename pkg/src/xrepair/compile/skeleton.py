"""Term skeletons: a term with every leaf replaced by a bullet ``*``."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from ..core import Compound, Var
from ..errors import ParseError


@dataclass(frozen=True)
class Skeleton:
    fn: str | None = None
    children: tuple = ()

    @property
    def is_bullet(self):
        return self.fn is None

    @property
    def arity(self) -> int:
        if self.fn is None:
            return 1
        return sum(c.arity for c in self.children)

    @property
    def depth(self) -> int:
        if self.fn is None:
            return 0
        return 1 + max((c.depth for c in self.children), default=0)

    def compose(self, subs) -> "Skeleton":
        """Replace the i-th bullet by ``subs[i]``."""
        subs = list(subs)
        if len(subs) != self.arity:
            raise ValueError(f"skeleton {self} has arity {self.arity}, got {len(subs)} arguments")
        it = iter(subs)

        def go(s):
            if s.fn is None:
                return next(it)
            return Skeleton(s.fn, tuple(go(c) for c in s.children))

        return go(self)

    def sort_key(self):
        return (self.depth, str(self))

    def __str__(self):
        if self.fn is None:
            return "*"
        return f"{self.fn}(" + ",".join(str(c) for c in self.children) + ")"


BULLET = Skeleton()


def skeleton_of(term):
    """Skeleton of a term together with its leaves, left to right."""
    leaves = []

    def go(t):
        if isinstance(t, Compound):
            return Skeleton(t.fn, tuple(go(a) for a in t.args))
        leaves.append(t)
        return BULLET

    return go(term), leaves


def build_term(skel: Skeleton, leaves):
    """Inverse of ``skeleton_of``."""
    it = iter(leaves)

    def go(s):
        if s.fn is None:
            return next(it)
        return Compound(s.fn, tuple(go(c) for c in s.children))

    return go(skel)


def skeletons_upto(functions, depth) -> list:
    """All skeletons over the given ``{name: arity}`` functions of depth at most ``depth``."""
    levels = [BULLET]
    if depth <= 0:
        return levels
    out = set(levels)
    frontier = set(levels)
    for _ in range(depth):
        pool = sorted(out, key=Skeleton.sort_key)
        new = set()
        for fn, n in sorted(functions.items()):
            for kids in itertools.product(pool, repeat=n):
                s = Skeleton(fn, tuple(kids))
                if s not in out:
                    new.add(s)
        out |= new
        frontier = new
        if not frontier:
            break
    return sorted(out, key=Skeleton.sort_key)


_SKEL_TOKEN = re.compile(r"\*|[A-Za-z_][A-Za-z0-9_']*|[(),]")


def parse_skeleton(text) -> Skeleton:
    toks = _SKEL_TOKEN.findall(text)
    if "".join(toks) != text.replace(" ", ""):
        raise ParseError(f"bad skeleton {text!r}")
    pos = 0

    def go():
        nonlocal pos
        t = toks[pos]
        pos += 1
        if t == "*":
            return BULLET
        if pos < len(toks) and toks[pos] == "(":
            pos += 1
            kids = []
            if toks[pos] == ")":
                pos += 1
                return Skeleton(t, ())
            while True:
                kids.append(go())
                if toks[pos] == ",":
                    pos += 1
                    continue
                if toks[pos] != ")":
                    raise ParseError(f"bad skeleton {text!r}")
                pos += 1
                return Skeleton(t, tuple(kids))
        raise ParseError(f"bad skeleton {text!r}")

    s = go()
    if pos != len(toks):
        raise ParseError(f"bad skeleton {text!r}")
    return s


def skeleton_list(text):
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    if cur or parts:
        parts.append("".join(cur))
    return [parse_skeleton(p) for p in parts]


def skel_relation(base, skels) -> str:
    return f"{base}{{" + ",".join(str(s) for s in skels) + "}"


def split_skel_relation(name):
    """``T{*,f(*,*)}`` -> ``("T", [*, f(*,*)])``; names without a subscript return None."""
    i = name.find("{")
    if i < 0 or not name.endswith("}"):
        return None
    return name[:i], skeleton_list(name[i + 1:-1])


def leaf_vars(var: Var, skel: Skeleton, taken) -> list:
    """Fresh variables standing for the leaves of ``var`` under ``skel``."""
    if skel.is_bullet:
        return [var]
    out = []
    for i in range(1, skel.arity + 1):
        name = f"{var.name}_{i}"
        while name in taken:
            name += "_"
        taken.add(name)
        out.append(Var(name))
    return out
