"""Finite level quotients as permutation groups on lexicographic level vertices.

Permutations are one-line image tuples over the d^n level-n vertices in
lexicographic order.  Stabilizer chains are built with a deterministic
variant of Schreier-Sims: base points are always the smallest moved point,
orbits are explored in sorted order, and generators are processed in their
declared order, so orders, sifting and coset data reproduce exactly across
runs and platforms.
"""

from __future__ import annotations

from .presets import GroupPreset
from .tree import Vertex, format_vertex, level_vertices
from .words import Word

Perm = tuple[int, ...]

DEFAULT_LEVEL_CAP = 10


class LevelCapExceeded(ValueError):
    """Guard against accidental huge quotients; override explicitly."""


def _check_level(preset: GroupPreset, n: int, level_cap: int | None):
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    cap = DEFAULT_LEVEL_CAP if level_cap is None else level_cap
    if preset.degree ** n > preset.degree ** cap:
        raise LevelCapExceeded(
            f"level {n} exceeds cap {cap} for degree {preset.degree}; "
            "pass an explicit level_cap to override"
        )


def compose(p: Perm, q: Perm) -> Perm:
    """Permutation of 'apply q, then p'."""
    return tuple(p[x] for x in q)


def perm_inverse(p: Perm) -> Perm:
    out = [0] * len(p)
    for i, x in enumerate(p):
        out[x] = i
    return tuple(out)


def word_perm(w: Word, n: int) -> Perm:
    """Image of a word on the lexicographic level-n vertices."""
    verts = level_vertices(w.preset.degree, n)
    index = {v: i for i, v in enumerate(verts)}
    return tuple(index[w.apply(v)] for v in verts)


class LevelAction:
    """Generator images of a preset on one tree level."""

    def __init__(self, preset: GroupPreset, n: int, level_cap: int | None = None):
        _check_level(preset, n, level_cap)
        self.preset = preset
        self.level = n
        self.vertices = level_vertices(preset.degree, n)
        self.images = {
            g: word_perm(Word.generator(preset, g), n) for g in preset.gen_names
        }

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "images": {g: list(p) for g, p in self.images.items()},
        }


def level_action(preset: GroupPreset, n: int, level_cap: int | None = None) -> LevelAction:
    return LevelAction(preset, n, level_cap)


class _ChainLevel:
    __slots__ = ("beta", "gens", "transversal")

    def __init__(self, beta: int, npoints: int):
        self.beta = beta
        self.gens: list[Perm] = []
        self.transversal: dict[int, Perm] = {beta: tuple(range(npoints))}


class StabChain:
    """Deterministic stabilizer chain with membership sifting."""

    def __init__(self, npoints: int, gens):
        self.npoints = npoints
        self.identity = tuple(range(npoints))
        self.levels: list[_ChainLevel] = []
        for g in gens:
            g = tuple(g)
            if g != self.identity:
                self._extend(g, 0)

    def _min_moved(self, p: Perm) -> int:
        for i, x in enumerate(p):
            if x != i:
                return i
        raise ValueError("identity has no moved point")

    def _sift(self, p: Perm, start: int) -> tuple[Perm, int]:
        """Strip p through levels start..; returns (residue, stuck level)."""
        for i in range(start, len(self.levels)):
            lvl = self.levels[i]
            t = lvl.transversal.get(p[lvl.beta])
            if t is None:
                return p, i
            p = compose(perm_inverse(t), p)
        return p, len(self.levels)

    def _extend(self, p: Perm, i: int) -> None:
        """Add p (known to fix the base points above level i) at level i."""
        residue, _ = self._sift(p, i)
        if residue == self.identity:
            return
        if i == len(self.levels):
            self.levels.append(_ChainLevel(self._min_moved(residue), self.npoints))
        self.levels[i].gens.append(residue)
        self._close(i)

    def _close(self, i: int) -> None:
        """Recompute orbit at level i and sift all Schreier generators."""
        lvl = self.levels[i]
        lvl.transversal = {lvl.beta: self.identity}
        queue = [lvl.beta]
        while queue:
            u = queue.pop(0)
            rep = lvl.transversal[u]
            for s in lvl.gens:
                v = s[u]
                if v not in lvl.transversal:
                    lvl.transversal[v] = compose(s, rep)
                    queue.append(v)
        for u in sorted(lvl.transversal):
            rep = lvl.transversal[u]
            for s in lvl.gens:
                schreier = compose(
                    perm_inverse(lvl.transversal[s[u]]), compose(s, rep)
                )
                if schreier != self.identity:
                    self._extend(schreier, i + 1)

    def order(self) -> int:
        n = 1
        for lvl in self.levels:
            n *= len(lvl.transversal)
        return n

    def contains(self, p: Perm) -> bool:
        residue, _ = self._sift(tuple(p), 0)
        return residue == self.identity

    def base(self) -> list[int]:
        return [lvl.beta for lvl in self.levels]


class PermSubgroup:
    """A subgroup of a level quotient with exact order and membership."""

    def __init__(self, level: int, gens, npoints: int):
        self.level = level
        self.npoints = npoints
        self.gens = [tuple(g) for g in gens]
        self.chain = StabChain(npoints, self.gens)

    def order(self) -> int:
        return self.chain.order()

    def contains(self, p: Perm) -> bool:
        return self.chain.contains(p)

    def contains_subgroup(self, other: "PermSubgroup") -> bool:
        return all(self.contains(g) for g in other.gens)

    def equals(self, other: "PermSubgroup") -> bool:
        return self.order() == other.order() and self.contains_subgroup(other)

    def orbits(self) -> list[list[int]]:
        seen = [False] * self.npoints
        out = []
        for start in range(self.npoints):
            if seen[start]:
                continue
            orbit = [start]
            seen[start] = True
            queue = [start]
            while queue:
                u = queue.pop(0)
                for g in self.gens:
                    v = g[u]
                    if not seen[v]:
                        seen[v] = True
                        orbit.append(v)
                        queue.append(v)
            out.append(sorted(orbit))
        return out

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "order": str(self.order()),
            "orbit_sizes": sorted((len(o) for o in self.orbits()), reverse=True),
        }


def image_subgroup(words, n: int, level_cap: int | None = None) -> PermSubgroup:
    """Level-n image subgroup generated by the given words."""
    words = list(words)
    if not words:
        raise ValueError("image_subgroup needs at least one word (may be identity)")
    preset = words[0].preset
    _check_level(preset, n, level_cap)
    return PermSubgroup(n, [word_perm(w, n) for w in words], preset.degree ** n)


def full_level_group(preset: GroupPreset, n: int, level_cap: int | None = None) -> PermSubgroup:
    gens = [Word.generator(preset, g) for g in preset.gen_names]
    return image_subgroup(gens, n, level_cap)


def quotient_order(preset: GroupPreset, n: int, level_cap: int | None = None) -> int:
    """|G / Stab_G(n)| via the stabilizer chain of the level image."""
    if n == 0:
        return 1
    return full_level_group(preset, n, level_cap).order()


def is_level_transitive(preset: GroupPreset, n: int, level_cap: int | None = None) -> bool:
    """True iff the level-n image has a single orbit."""
    if n == 0:
        return True
    grp = full_level_group(preset, n, level_cap)
    return len(grp.orbits()) == 1


def subgroup_index_in_quotient(words, n: int, level_cap: int | None = None) -> int:
    """Index of the words' image inside the full level-n quotient."""
    words = list(words)
    if not words:
        raise ValueError("need a preset context; pass the identity word for the trivial subgroup")
    preset = words[0].preset
    full = quotient_order(preset, n, level_cap)
    sub = image_subgroup(words, n, level_cap).order()
    q, r = divmod(full, sub)
    if r:
        raise AssertionError("subgroup order does not divide group order")
    return q


def point_stabilizer_words(
    v: Vertex, n: int, preset: GroupPreset, level_cap: int | None = None
) -> list[Word]:
    """Schreier generators (as words) of the stabilizer of v at level n.

    Coset representative words are built by deterministic BFS over the
    level-n orbit of v; the returned words generate a subgroup whose
    level-n image is exactly the point stabilizer of v.
    """
    if len(v) != n:
        raise ValueError(f"vertex {format_vertex(v)} is not at level {n}")
    _check_level(preset, n, level_cap)
    gens = [Word.generator(preset, g) for g in preset.gen_names]
    if n == 0:
        return gens
    reps: dict[Vertex, Word] = {v: Word.identity(preset)}
    queue = [v]
    while queue:
        u = queue.pop(0)
        for g in gens:
            w = g.apply(u)
            if w not in reps:
                reps[w] = g * reps[u]
                queue.append(w)
    out: list[Word] = []
    seen = set()
    for u in sorted(reps):
        for g in gens:
            word = reps[g.apply(u)].inverse() * g * reps[u]
            if word.factors and word.factors not in seen:
                seen.add(word.factors)
                out.append(word)
    return out
