"""Self-similar group presets: wreath recursions, reduction rules, branching data.

A preset bundles everything needed to compute in one group: the tree degree,
one wreath recursion per generator (root permutation + d section words), a
finite set of length-non-increasing reduction rules giving canonical word
forms, and a seed generating set for the designated branching subgroup.

Words are stored as tuples of (generator name, exponent) factors.  The text
syntax is whitespace-separated factors with optional ^-exponents
("a b a^-1"); a single run of one-letter generator names may also be written
without spaces ("abab").
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

Factor = tuple[str, int]
Factors = tuple[Factor, ...]

_MAX_REDUCTION_PASSES = 1000


class PresetError(ValueError):
    """Raised for malformed presets or words."""


@dataclass(frozen=True)
class GeneratorRecursion:
    """One generator: its root permutation and its d section words."""

    name: str
    root_perm: tuple[int, ...]
    sections: tuple[Factors, ...]


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    location: str
    message: str


@dataclass(frozen=True)
class GroupPreset:
    degree: int
    generators: tuple[GeneratorRecursion, ...]
    reduction_rules: tuple[tuple[Factors, Factors], ...]
    branching_generators: tuple[Factors, ...]
    contracting_certified: bool = False
    name: str = ""

    # -- derived tables ---------------------------------------------------

    @cached_property
    def gen_map(self) -> dict[str, GeneratorRecursion]:
        return {g.name: g for g in self.generators}

    @cached_property
    def gen_names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    @cached_property
    def gen_order(self) -> dict[str, int]:
        """Orders declared by rules of the form x^k -> 1."""
        orders: dict[str, int] = {}
        for lhs, rhs in self.reduction_rules:
            if rhs == () and len(lhs) == 1 and lhs[0][1] > 1:
                orders[lhs[0][0]] = lhs[0][1]
        return orders

    @cached_property
    def pair_table(self) -> dict[tuple[Factor, Factor], Factors]:
        """Rules whose left side is a product of two factors."""
        table: dict[tuple[Factor, Factor], Factors] = {}
        for lhs, rhs in self.reduction_rules:
            if len(lhs) == 2:
                table[(lhs[0], lhs[1])] = rhs
        return table

    @cached_property
    def inverse_perms(self) -> dict[str, tuple[int, ...]]:
        inv = {}
        for g in self.generators:
            p = [0] * self.degree
            for i, x in enumerate(g.root_perm):
                p[x] = i
            inv[g.name] = tuple(p)
        return inv

    # Mutable memo tables, shared by the element engine.  Keys are canonical
    # factor tuples, so concurrent repopulation is idempotent.
    @cached_property
    def _section_cache(self) -> dict:
        return {}

    @cached_property
    def _identity_cache(self) -> dict:
        return {}

    @cached_property
    def _order_cache(self) -> dict:
        return {}

    @cached_property
    def _apply_cache(self) -> dict:
        return {}

    @cached_property
    def _rist_cache(self) -> dict:
        return {}

    # -- word handling ----------------------------------------------------

    def reduce(self, factors) -> Factors:
        """Canonical form of a factor sequence under the preset's rules."""
        syl = [(g, e) for g, e in factors if e != 0]
        for g, _ in syl:
            if g not in self.gen_map:
                raise PresetError(f"unknown generator {g!r}")
        orders = self.gen_order
        table = self.pair_table
        for _ in range(_MAX_REDUCTION_PASSES):
            changed = False
            merged: list[Factor] = []
            for g, e in syl:
                if merged and merged[-1][0] == g:
                    e += merged.pop()[1]
                    changed = True
                o = orders.get(g)
                if o is not None:
                    e2 = e % o
                    if e2 != e:
                        changed = True
                    e = e2
                if e:
                    merged.append((g, e))
                else:
                    changed = True
            rewritten: list[Factor] = []
            i = 0
            while i < len(merged):
                if i + 1 < len(merged) and (merged[i], merged[i + 1]) in table:
                    rewritten.extend(table[(merged[i], merged[i + 1])])
                    i += 2
                    changed = True
                else:
                    rewritten.append(merged[i])
                    i += 1
            syl = rewritten
            if not changed:
                return tuple(syl)
        raise PresetError("reduction did not terminate (non-terminating rules?)")

    def parse_word(self, text: str) -> Factors:
        """Parse the word syntax into reduced factors."""
        factors: list[Factor] = []
        for token in text.replace("*", " ").split():
            name, _, exp = token.partition("^")
            if exp:
                try:
                    e = int(exp)
                except ValueError:
                    raise PresetError(f"bad exponent in token {token!r}") from None
            else:
                e = 1
            if name in self.gen_map:
                factors.append((name, e))
            elif all(c in self.gen_map for c in name):
                # run of one-letter generators, e.g. "abab"
                for c in name[:-1]:
                    factors.append((c, 1))
                factors.append((name[-1], e))
            elif name == "1" or name == "":
                continue
            else:
                raise PresetError(f"unknown generator in token {token!r}")
        return self.reduce(factors)

    @staticmethod
    def format_factors(factors: Factors) -> str:
        if not factors:
            return "1"
        return " ".join(g if e == 1 else f"{g}^{e}" for g, e in factors)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "degree": self.degree,
            "generators": [
                {
                    "name": g.name,
                    "root_perm": list(g.root_perm),
                    "sections": [self.format_factors(s) for s in g.sections],
                }
                for g in self.generators
            ],
            "rules": [
                {"lhs": self.format_factors(l), "rhs": self.format_factors(r)}
                for l, r in self.reduction_rules
            ],
            "branching": [self.format_factors(w) for w in self.branching_generators],
            "contracting": self.contracting_certified,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _parse_factors_loose(text: str, names: set[str]) -> Factors:
    """Word parsing against a name set, for use before a preset exists."""
    factors: list[Factor] = []
    for token in str(text).replace("*", " ").split():
        name, _, exp = token.partition("^")
        e = int(exp) if exp else 1
        if name in names:
            factors.append((name, e))
        elif name and all(c in names for c in name):
            for c in name[:-1]:
                factors.append((c, 1))
            factors.append((name[-1], e))
        elif name in ("1", ""):
            continue
        else:
            raise PresetError(f"unknown generator in token {token!r}")
    return tuple(factors)


def preset_from_dict(data: dict) -> GroupPreset:
    try:
        degree = int(data["degree"])
        gen_specs = data["generators"]
    except (KeyError, TypeError) as exc:
        raise PresetError(f"malformed group definition: {exc}") from exc
    names = {str(g["name"]) for g in gen_specs}
    gens = []
    for g in gen_specs:
        gens.append(
            GeneratorRecursion(
                name=str(g["name"]),
                root_perm=tuple(int(x) for x in g["root_perm"]),
                sections=tuple(_parse_factors_loose(s, names) for s in g["sections"]),
            )
        )
    rules = tuple(
        (_parse_factors_loose(r["lhs"], names), _parse_factors_loose(r["rhs"], names))
        for r in data.get("rules", [])
    )
    branching = tuple(_parse_factors_loose(w, names) for w in data.get("branching", []))
    return GroupPreset(
        degree=degree,
        generators=tuple(gens),
        reduction_rules=rules,
        branching_generators=branching,
        contracting_certified=bool(data.get("contracting", False)),
        name=str(data.get("name", "")),
    )


def load_preset(path: str | Path) -> GroupPreset:
    with open(path, encoding="utf-8") as fh:
        return preset_from_dict(json.load(fh))


def save_preset(preset: GroupPreset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(preset.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- shipped presets ------------------------------------------------------


def grigorchuk_preset() -> GroupPreset:
    """The first Grigorchuk group on the binary tree."""
    w = lambda *names: tuple((n, 1) for n in names)  # noqa: E731
    gens = (
        GeneratorRecursion("a", (1, 0), (w(), w())),
        GeneratorRecursion("b", (0, 1), (w("a"), w("c"))),
        GeneratorRecursion("c", (0, 1), (w("a"), w("d"))),
        GeneratorRecursion("d", (0, 1), (w(), w("b"))),
    )
    rules = tuple((((x, 2),), ()) for x in "abcd")
    pair_rules = tuple(
        (w(x, y), w(z))
        for x, y, z in [
            ("b", "c", "d"),
            ("c", "b", "d"),
            ("b", "d", "c"),
            ("d", "b", "c"),
            ("c", "d", "b"),
            ("d", "c", "b"),
        ]
    )
    return GroupPreset(
        degree=2,
        generators=gens,
        reduction_rules=rules + pair_rules,
        branching_generators=(w("a", "b", "a", "b"),),
        contracting_certified=True,
        name="grigorchuk",
    )


def ggs_preset(d: int, E) -> GroupPreset:
    """The GGS group on the d-regular tree with defining vector E."""
    if d < 2:
        raise PresetError(f"GGS degree must be >= 2, got {d}")
    E = tuple(int(e) % d for e in E)
    if len(E) != d - 1:
        raise PresetError(f"defining vector must have length {d - 1}, got {len(E)}")
    cycle = tuple((i + 1) % d for i in range(d))
    b_sections = tuple(
        ((("a", e),) if e else ()) for e in E
    ) + ((("b", 1),),)
    gens = (
        GeneratorRecursion("a", cycle, tuple(() for _ in range(d))),
        GeneratorRecursion("b", tuple(range(d)), b_sections),
    )
    rules = (((("a", d),), ()), ((("b", d),), ()))
    commutator = (("a", -1), ("b", -1), ("a", 1), ("b", 1))
    certified = regular_branch_vector_check(d, E)
    return GroupPreset(
        degree=d,
        generators=gens,
        reduction_rules=rules,
        branching_generators=(commutator,),
        contracting_certified=certified,
        name=f"ggs-{d}-" + ",".join(str(e) for e in E),
    )


def gupta_sidki_preset() -> GroupPreset:
    """The Gupta-Sidki 3-group: GGS with d=3, E=(1,-1)."""
    return ggs_preset(3, (1, -1))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    k = 2
    while k * k <= n:
        if n % k == 0:
            return False
        k += 1
    return True


def regular_branch_vector_check(d: int, E) -> bool:
    """Syntactic regular-branch criterion for a GGS defining vector.

    True iff d is prime and the entries are neither all zero nor all
    non-zero, or the vector is (1, -1).  This reads the vector as given;
    it is a criterion, not a proof about the group.
    """
    E = tuple(int(e) % d for e in E)
    if len(E) != d - 1:
        raise PresetError(f"defining vector must have length {d - 1}, got {len(E)}")
    if E == (1 % d, -1 % d):
        return True
    zeros = sum(1 for e in E if e == 0)
    return _is_prime(d) and 0 < zeros < len(E)


def builtin_preset(name: str) -> GroupPreset:
    """Look up a shipped preset by name."""
    if name == "grigorchuk":
        return grigorchuk_preset()
    if name in ("gupta-sidki", "gupta_sidki"):
        return gupta_sidki_preset()
    if name.startswith("ggs:"):
        # ggs:d:e1,e2,...
        try:
            _, d, vec = name.split(":")
            return ggs_preset(int(d), [int(x) for x in vec.split(",")])
        except (ValueError, PresetError) as exc:
            raise PresetError(f"bad GGS preset spec {name!r}: {exc}") from exc
    raise PresetError(f"unknown preset {name!r}")


# -- validation -----------------------------------------------------------


def validate_preset(preset: GroupPreset) -> list[ValidationIssue]:
    """Check all structural invariants; returns one issue per violation."""
    issues: list[ValidationIssue] = []
    d = preset.degree
    if d < 2:
        issues.append(ValidationIssue("invalid-degree", "degree", f"degree {d} < 2"))
        return issues
    names = [g.name for g in preset.generators]
    if len(set(names)) != len(names):
        issues.append(
            ValidationIssue("duplicate-name", "generators", "generator names not distinct")
        )
    known = set(names)

    def check_word(factors, where):
        for g, _ in factors:
            if g not in known:
                issues.append(
                    ValidationIssue("unknown-symbol", where, f"undeclared generator {g!r}")
                )

    for g in preset.generators:
        if sorted(g.root_perm) != list(range(d)):
            issues.append(
                ValidationIssue(
                    "not-a-permutation",
                    f"generator {g.name}",
                    f"root_perm {g.root_perm} is not a bijection of 0..{d - 1}",
                )
            )
        if len(g.sections) != d:
            issues.append(
                ValidationIssue(
                    "wrong-section-count",
                    f"generator {g.name}",
                    f"expected {d} sections, got {len(g.sections)}",
                )
            )
        for i, s in enumerate(g.sections):
            check_word(s, f"generator {g.name}, section {i}")
    for i, (lhs, rhs) in enumerate(preset.reduction_rules):
        check_word(lhs, f"rule {i} lhs")
        check_word(rhs, f"rule {i} rhs")
        llen = sum(abs(e) for _, e in lhs)
        rlen = sum(abs(e) for _, e in rhs)
        if rlen > llen:
            issues.append(
                ValidationIssue(
                    "length-increasing-rule", f"rule {i}", f"|rhs|={rlen} > |lhs|={llen}"
                )
            )
        if not (len(lhs) == 1 or len(lhs) == 2):
            issues.append(
                ValidationIssue(
                    "unsupported-rule", f"rule {i}", "rule lhs must have 1 or 2 factors"
                )
            )
    for i, wrd in enumerate(preset.branching_generators):
        check_word(wrd, f"branching generator {i}")
    return issues
