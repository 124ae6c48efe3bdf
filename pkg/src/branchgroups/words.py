"""Exact arithmetic on tree automorphisms represented as reduced words.

The composition convention is leftmost-last: (gh)(w) = g(h(w)), with the
section rule (gh)_v = g_{h(v)} h_v.  Under this convention the Grigorchuk
recursion reads b = (a, c), c = (a, d), d = (1, b) exactly as constructed
by the preset.

The word problem is solved by closing a word's set of iterated sections:
an element is trivial iff every word in the closure has a trivial root
permutation.  On contracting-certified presets the closure is finite and
the recursion runs unbounded; otherwise an explicit node budget applies
and exhaustion raises BudgetExhausted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .presets import Factors, GroupPreset
from .tree import Vertex, format_vertex, level_vertices

DEFAULT_IDENTITY_BUDGET = 200_000
DEFAULT_ORDER_BUDGET = 100_000


class BudgetExhausted(Exception):
    """A bounded computation ran out of budget without an answer."""

    def __init__(self, what: str, budget: int):
        super().__init__(f"{what}: budget {budget} exhausted")
        self.what = what
        self.budget = budget


def _invert_factors(factors: Factors) -> Factors:
    return tuple((g, -e) for g, e in reversed(factors))


def _perm_inverse(p: tuple[int, ...]) -> tuple[int, ...]:
    out = [0] * len(p)
    for i, x in enumerate(p):
        out[x] = i
    return tuple(out)


def root_perm_of(preset: GroupPreset, factors: Factors) -> tuple[int, ...]:
    """The permutation induced on the first level (leftmost factor last)."""
    perm = tuple(range(preset.degree))
    for g, e in reversed(factors):
        p = preset.gen_map[g].root_perm
        if e < 0:
            p, e = preset.inverse_perms[g], -e
        for _ in range(e):
            perm = tuple(p[x] for x in perm)
    return perm


def _apply_gen(preset: GroupPreset, name: str, v: Vertex) -> Vertex:
    if not v:
        return v
    key = (name, v)
    cache = preset._apply_cache
    got = cache.get(key)
    if got is None:
        gen = preset.gen_map[name]
        got = (gen.root_perm[v[0]],) + apply_factors(preset, gen.sections[v[0]], v[1:])
        cache[key] = got
    return got


def _apply_gen_inverse(preset: GroupPreset, name: str, v: Vertex) -> Vertex:
    if not v:
        return v
    key = (name, -1, v)
    cache = preset._apply_cache
    got = cache.get(key)
    if got is None:
        gen = preset.gen_map[name]
        x = preset.inverse_perms[name][v[0]]
        got = (x,) + apply_factors(preset, _invert_factors(gen.sections[x]), v[1:])
        cache[key] = got
    return got


def apply_factors(preset: GroupPreset, factors: Factors, v: Vertex) -> Vertex:
    """Image of vertex v under the word, rightmost factor applied first."""
    for g, e in reversed(factors):
        if e > 0:
            for _ in range(e):
                v = _apply_gen(preset, g, v)
        else:
            for _ in range(-e):
                v = _apply_gen_inverse(preset, g, v)
    return v


def section1(preset: GroupPreset, factors: Factors, x: int) -> Factors:
    """Section of a reduced word at first-level child x, reduced."""
    key = (factors, x)
    cache = preset._section_cache
    got = cache.get(key)
    if got is not None:
        return got
    parts: list[Factors] = []
    cur = x
    for g, e in reversed(factors):
        gen = preset.gen_map[g]
        if e > 0:
            for _ in range(e):
                parts.append(gen.sections[cur])
                cur = gen.root_perm[cur]
        else:
            for _ in range(-e):
                cur = preset.inverse_perms[g][cur]
                parts.append(_invert_factors(gen.sections[cur]))
    flat: list = []
    for p in reversed(parts):
        flat.extend(p)
    result = preset.reduce(flat)
    cache[key] = result
    return result


def section_factors(preset: GroupPreset, factors: Factors, v: Vertex) -> Factors:
    """Section at an arbitrary vertex: iterated first-level sections."""
    for x in v:
        factors = section1(preset, factors, x)
    return factors


def is_identity_factors(
    preset: GroupPreset, factors: Factors, budget: int | None = None
) -> bool:
    """True iff the word acts trivially on the whole tree.

    Closes the word under first-level sections; triviality holds iff every
    member of the closure has a trivial root permutation.
    """
    cache = preset._identity_cache
    known = cache.get(factors)
    if known is not None:
        return known
    if budget is None and not preset.contracting_certified:
        budget = DEFAULT_IDENTITY_BUDGET
    trivial_perm = tuple(range(preset.degree))
    seen = {factors}
    stack = [factors]
    while stack:
        f = stack.pop()
        cached = cache.get(f)
        if cached is True:
            continue
        if cached is False or root_perm_of(preset, f) != trivial_perm:
            cache[f] = False
            cache[factors] = False
            return False
        for x in range(preset.degree):
            s = section1(preset, f, x)
            if s and s not in seen:
                seen.add(s)
                stack.append(s)
                if budget is not None and len(seen) > budget:
                    raise BudgetExhausted("is_identity", budget)
    for f in seen:
        cache[f] = True
    return True


def _power_factors(preset: GroupPreset, factors: Factors, m: int) -> Factors:
    if m < 0:
        factors, m = _invert_factors(factors), -m
    out: Factors = ()
    piece = factors
    while m:
        if m & 1:
            out = preset.reduce(out + piece)
        m >>= 1
        if m:
            piece = preset.reduce(piece + piece)
    return out


def _perm_order(p: tuple[int, ...]) -> int:
    seen = [False] * len(p)
    order = 1
    for i in range(len(p)):
        if not seen[i]:
            n, j = 0, i
            while not seen[j]:
                seen[j] = True
                j = p[j]
                n += 1
            order = math.lcm(order, n)
    return order


def order_factors(
    preset: GroupPreset, factors: Factors, budget: int | None = DEFAULT_ORDER_BUDGET
) -> int:
    """Least m >= 1 with the m-th power trivial; arbitrary precision.

    Recursion: with r the order of the root permutation, ord(g) equals
    r * lcm of the orders of the first-level sections of g^r.  A budget
    bounds the total number of recursion nodes; exhaustion (in particular
    on non-torsion elements, which recurse forever) raises BudgetExhausted.
    """
    counter = [0]
    stack: list[Factors] = []
    positions: dict[Factors, tuple[int, int]] = {}  # word -> (stack depth, multiplier)
    _NO_BACKEDGE = 1 << 60

    def rec(f: Factors, mult: int) -> tuple[int, int]:
        # Returns (order contribution, shallowest back-edge depth).  A value
        # whose subtree reached back to a strict ancestor is exact only as a
        # contribution to that ancestor's lcm and must not be memoized.
        f = preset.reduce(f)
        if not f:
            return 1, _NO_BACKEDGE
        cache = preset._order_cache
        got = cache.get(f)
        if got is not None:
            return got, _NO_BACKEDGE
        counter[0] += 1
        if budget is not None and counter[0] > budget:
            raise BudgetExhausted("element_order", budget)
        hit = positions.get(f)
        if hit is not None:
            depth, entry_mult = hit
            if mult == entry_mult:
                # Section cycle through trivial root permutations: the
                # constraint repeats the ancestor's and adds nothing.
                return 1, depth
            # Re-entered below a power step: g^m = 1 forces g^(m*k) = 1
            # with k > 1, so no finite order exists.
            raise BudgetExhausted("element_order", budget or 0)
        my_depth = len(stack)
        stack.append(f)
        positions[f] = (my_depth, mult)
        try:
            r = _perm_order(root_perm_of(preset, f))
            h = _power_factors(preset, f, r)
            lowest = _NO_BACKEDGE
            if not h:
                result = r
            else:
                m = 1
                for x in range(preset.degree):
                    val, low = rec(section1(preset, h, x), mult * r)
                    m = math.lcm(m, val)
                    lowest = min(lowest, low)
                result = r * m
        finally:
            stack.pop()
            del positions[f]
        if lowest >= my_depth:
            # No dependence on a strict ancestor: the fixpoint is exact here.
            cache[f] = result
            return result, _NO_BACKEDGE
        return result, lowest

    return rec(factors, 1)[0]


@dataclass(frozen=True)
class Portrait:
    """Depth-n truncation of an automorphism: root permutations of all
    sections at levels < n."""

    depth: int
    decorations: dict

    def is_trivial(self) -> bool:
        return all(p == tuple(range(len(p))) for p in self.decorations.values())

    def walk(self, v: Vertex) -> Vertex:
        """Image of a vertex of level <= depth read off the decorations."""
        out = []
        prefix: Vertex = ()
        for x in v:
            out.append(self.decorations[prefix][x])
            prefix = prefix + (x,)
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "decorations": {
                format_vertex(v): list(p) for v, p in sorted(self.decorations.items())
            },
        }


def portrait_factors(preset: GroupPreset, factors: Factors, n: int) -> Portrait:
    if n < 0:
        raise ValueError(f"portrait depth must be >= 0, got {n}")
    decorations = {}
    frontier: list[tuple[Vertex, Factors]] = [((), factors)]
    for _ in range(n):
        nxt = []
        for v, f in frontier:
            decorations[v] = root_perm_of(preset, f)
            for x in range(preset.degree):
                nxt.append((v + (x,), section1(preset, f, x)))
        frontier = nxt
    return Portrait(depth=n, decorations=decorations)


class Word:
    """A group element: a reduced word in the preset's generators."""

    __slots__ = ("preset", "factors")

    def __init__(self, preset: GroupPreset, factors=(), reduced: bool = False):
        self.preset = preset
        self.factors = tuple(factors) if reduced else preset.reduce(factors)

    @classmethod
    def identity(cls, preset: GroupPreset) -> "Word":
        return cls(preset, (), reduced=True)

    @classmethod
    def from_str(cls, preset: GroupPreset, text: str) -> "Word":
        return cls(preset, preset.parse_word(text), reduced=True)

    @classmethod
    def generator(cls, preset: GroupPreset, name: str) -> "Word":
        return cls(preset, ((name, 1),))

    def __mul__(self, other: "Word") -> "Word":
        if self.preset is not other.preset:
            raise ValueError("cannot multiply words over different presets")
        return Word(self.preset, self.preset.reduce(self.factors + other.factors), True)

    def inverse(self) -> "Word":
        return Word(self.preset, _invert_factors(self.factors))

    def __pow__(self, m: int) -> "Word":
        return Word(self.preset, _power_factors(self.preset, self.factors, m), True)

    def conjugate_by(self, f: "Word") -> "Word":
        """f * self * f^-1."""
        return f * self * f.inverse()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Word)
            and self.preset is other.preset
            and self.factors == other.factors
        )

    def __hash__(self) -> int:
        return hash(self.factors)

    def __repr__(self) -> str:
        return f"Word({self.preset.format_factors(self.factors)!r})"

    def __str__(self) -> str:
        return self.preset.format_factors(self.factors)

    def __len__(self) -> int:
        return sum(abs(e) for _, e in self.factors)

    # -- group action ------------------------------------------------------

    def apply(self, v: Vertex) -> Vertex:
        return apply_factors(self.preset, self.factors, v)

    def section(self, v: Vertex) -> "Word":
        return Word(self.preset, section_factors(self.preset, self.factors, v), True)

    def root_perm(self) -> tuple[int, ...]:
        return root_perm_of(self.preset, self.factors)

    def is_identity(self, budget: int | None = None) -> bool:
        return is_identity_factors(self.preset, self.factors, budget)

    def fixes_level(self, n: int) -> bool:
        return all(self.apply(v) == v for v in level_vertices(self.preset.degree, n))

    def portrait(self, n: int) -> Portrait:
        return portrait_factors(self.preset, self.factors, n)

    def order(self, budget: int | None = DEFAULT_ORDER_BUDGET) -> int:
        return order_factors(self.preset, self.factors, budget)
