"""Countable families of first-order formulas, as deterministic enumerators.

A family member pairs a first-order formula with an ordered split of its
free variables into relation slots (the coordinates of the relation it
defines) and parameters.  Four built-ins are provided:

* ``weak_so(sig, k)``    finite disjunctions of slot/parameter equalities;
  quantification over nonempty finite subsets of the k-fold product.
* ``dsl(sig)``           all parameter-free formulas in one free variable,
  enumerated by size then by a canonical structural order.
* ``all_fo(sig)``        every formula with every slot/parameter split
  (or parameter-free splits only, with ``parameters=False``).
* ``prefix_family(sig, kind, n)``  the members of ``all_fo`` whose prenex
  class is within the n-th existential (resp. universal) level.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .formulas import (
    And, Const, ForallFO, FormulaError, FOVar, Func, Not, Or, PredApp,
    Formula, Signature, TermEq, Var, alpha_key, free_variables,
    is_first_order, normalize, parse,
)


@dataclass(frozen=True)
class ThetaMember:
    """One enumerated formula with its slot/parameter split."""
    index: int
    formula: Formula
    slots: tuple
    params: tuple

    def __post_init__(self):
        if len(self.slots) < 1:
            raise FormulaError("a member must define a relation of arity >= 1")
        if set(self.slots) & set(self.params):
            raise FormulaError("slots and parameters overlap")
        if not is_first_order(self.formula):
            raise FormulaError("members must be first-order")
        fo, _ = free_variables(self.formula)
        if fo != set(self.slots) | set(self.params):
            raise FormulaError(
                f"free variables {sorted(v.index for v in fo)} do not match the "
                f"declared slot/parameter split")

    @property
    def arity(self) -> int:
        return len(self.slots)

    def key(self):
        """Alpha key that also fixes the slot/parameter split."""
        closed = self.formula
        for v in reversed(self.slots + self.params):
            closed = ForallFO(v, closed)
        return (len(self.slots), len(self.params), alpha_key(closed))


class ThetaFamily:
    """Deterministic total enumerator n -> member, with cached prefixes."""

    def __init__(self, name: str, sig: Signature, generator, arities=None,
                 contains=None):
        self.name = name
        self.sig = sig
        self._gen_factory = generator
        self._iter = generator()
        self._cache: list = []
        self._arity_cache: dict = {}
        self.arities = arities  # None means every arity >= 1 occurs
        self._contains = contains

    def member_at(self, n: int) -> ThetaMember:
        while len(self._cache) <= n:
            formula, slots, params = next(self._iter)
            self._cache.append(ThetaMember(len(self._cache), formula,
                                           tuple(slots), tuple(params)))
        return self._cache[n]

    def enumerate_up_to(self, n: int) -> list:
        return [self.member_at(i) for i in range(n + 1)]

    def arity_supported(self, arity: int) -> bool:
        return self.arities is None or arity in self.arities

    def arity_member(self, arity: int, n: int) -> ThetaMember:
        """n-th member of the given arity (the per-arity view of the family)."""
        if not self.arity_supported(arity):
            raise FormulaError(f"family {self.name} has no members of arity {arity}")
        found = self._arity_cache.setdefault(arity, [])
        i = found[-1] + 1 if found else 0
        while len(found) <= n:
            m = self.member_at(i)
            if m.arity == arity:
                found.append(i)
            i += 1
        return self.member_at(found[n])

    def contains(self, formula: Formula, slots, params):
        """Optional membership test; None when the family cannot decide."""
        if self._contains is None:
            return None
        return self._contains(formula, tuple(slots), tuple(params))

    def __repr__(self):
        return f"ThetaFamily({self.name!r})"


def theta_at(fam: ThetaFamily, n: int) -> ThetaMember:
    return fam.member_at(n)


def enumerate_up_to(fam: ThetaFamily, n: int) -> list:
    return fam.enumerate_up_to(n)


# ---------------------------------------------------------------------------
# weak second-order logic
# ---------------------------------------------------------------------------

def weak_so(sig: Signature, k: int = 1) -> ThetaFamily:
    """Member n: a disjunction of n+1 equality blocks, one per parameter tuple.

    For k = 1 this is the literal family x = y0 | ... | x = yn; the k > 1
    version conjoins coordinatewise equalities inside each disjunct.  Every
    member needs identity, and every defined relation is nonempty.
    """
    if not sig.identity:
        raise FormulaError("this family needs identity in the signature")
    if k < 1:
        raise FormulaError("relation arity must be >= 1")

    def gen():
        for n in itertools.count():
            yield _weak_member_parts(k, n)

    def member_test(formula, slots, params):
        if len(slots) != k or len(params) % k != 0 or not params:
            return False
        probe = ThetaMember(0, formula, tuple(slots), tuple(params))
        n = len(params) // k - 1
        want = ThetaMember(0, *_weak_member_parts(k, n))
        return probe.key() == want.key()

    return ThetaFamily(f"weak-so:{k}", sig, gen, arities={k}, contains=member_test)


def _weak_member_parts(k: int, n: int):
    slots = tuple(FOVar(j) for j in range(k))
    params = tuple(FOVar(k + i) for i in range(k * (n + 1)))
    disjuncts = []
    for i in range(n + 1):
        eqs = [TermEq(Var(slots[j]), Var(params[i * k + j])) for j in range(k)]
        block = eqs[0]
        for e in eqs[1:]:
            block = And(block, e)
        disjuncts.append(block)
    f = disjuncts[0]
    for d in disjuncts[1:]:
        f = Or(f, d)
    return f, slots, params


# ---------------------------------------------------------------------------
# Formula enumeration by size
# ---------------------------------------------------------------------------

class FormulaEnumerator:
    """All first-order formulas over a signature, by size then lexicographic.

    Size counts AST nodes (quantifiers count one, their variable none).
    The variable pool grows with the size so the enumeration is total; at
    the scales this project runs, sizes stay small.
    """

    #: hard cap on the variable pool per size class; a formula of size s
    #: mentions at most s distinct variables anyway, the min keeps the
    #: small size classes small.
    POOL_CAP = 4

    def __init__(self, sig: Signature):
        self.sig = sig
        self._terms: dict = {}
        self._formulas: dict = {}

    def _pool(self, size: int) -> list:
        return [FOVar(i) for i in range(min(size, self.POOL_CAP))]

    def terms_of_size(self, size: int, pool) -> list:
        key = (size, len(pool))
        if key in self._terms:
            return self._terms[key]
        out = []
        if size == 1:
            out.extend(Var(v) for v in pool)
            out.extend(Const(c) for c in sorted(self.sig.constants))
        elif size > 1:
            for name in sorted(self.sig.functions):
                arity = self.sig.functions[name]
                for split in _compositions(size - 1, arity):
                    for args in itertools.product(
                            *(self.terms_of_size(s, pool) for s in split)):
                        out.append(Func(name, args))
        self._terms[key] = out
        return out

    def formulas_of_size(self, size: int) -> list:
        if size in self._formulas:
            return self._formulas[size]
        pool = self._pool(size)
        out = []
        for name in sorted(self.sig.predicates):
            arity = self.sig.predicates[name]
            if arity >= size:
                continue
            for split in _compositions(size - 1, arity):
                for args in itertools.product(
                        *(self.terms_of_size(s, pool) for s in split)):
                    out.append(PredApp(name, args))
        if self.sig.identity:
            for split in _compositions(size - 1, 2):
                for left in self.terms_of_size(split[0], pool):
                    for right in self.terms_of_size(split[1], pool):
                        out.append(TermEq(left, right))
        if size >= 2:
            for body in self.formulas_of_size(size - 1):
                out.append(Not(body))
            for v in pool:
                for body in self.formulas_of_size(size - 1):
                    out.append(ForallFO(v, body))
        if size >= 3:
            for ls in range(1, size - 1):
                for left in self.formulas_of_size(ls):
                    for right in self.formulas_of_size(size - 1 - ls):
                        out.append(And(left, right))
        out.sort(key=_struct_key)
        self._formulas[size] = out
        return out

    def __iter__(self):
        for size in itertools.count(1):
            yield from self.formulas_of_size(size)


def _compositions(total: int, parts: int):
    """Ordered compositions of `total` into `parts` positive summands."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _struct_key(f):
    if isinstance(f, PredApp):
        return (0, f.name, tuple(_term_key(t) for t in f.args))
    if isinstance(f, TermEq):
        return (1, _term_key(f.left), _term_key(f.right))
    if isinstance(f, Not):
        return (2, _struct_key(f.body))
    if isinstance(f, And):
        return (3, _struct_key(f.left), _struct_key(f.right))
    if isinstance(f, ForallFO):
        return (4, f.var.index, _struct_key(f.body))
    raise FormulaError(f"enumerator produced unexpected node {f!r}")


def _term_key(t):
    if isinstance(t, Var):
        return (0, t.var.index)
    if isinstance(t, Const):
        return (1, t.name)
    return (2, t.name, tuple(_term_key(a) for a in t.args))


# ---------------------------------------------------------------------------
# dsl / all_fo / prefix families
# ---------------------------------------------------------------------------

def dsl(sig: Signature) -> ThetaFamily:
    """All parameter-free formulas in exactly one free variable, deduplicated
    up to renaming."""

    def gen():
        seen = set()
        for f in FormulaEnumerator(sig):
            fo, _ = free_variables(f)
            if len(fo) != 1:
                continue
            slot = next(iter(fo))
            member = ThetaMember(0, f, (slot,), ())
            k = member.key()
            if k in seen:
                continue
            seen.add(k)
            yield f, (slot,), ()

    def member_test(formula, slots, params):
        if params or len(slots) != 1 or not is_first_order(formula):
            return False
        fo, so = free_variables(formula)
        return not so and fo == {slots[0]}

    return ThetaFamily("dsl", sig, gen, arities={1}, contains=member_test)


def all_fo(sig: Signature, parameters: bool = True) -> ThetaFamily:
    """Every first-order formula under every slot/parameter split.

    Slots are a nonempty subset of the free variables in increasing index
    order, parameters the rest; with parameters=False only the full-slot
    split is emitted.  Converse relations are still covered because the
    enumeration contains every variable permutation of every formula.
    """

    def gen():
        seen = set()
        for f in FormulaEnumerator(sig):
            fo, _ = free_variables(f)
            if not fo:
                continue
            fv = tuple(sorted(fo))
            splits = []
            if parameters:
                for r in range(1, len(fv) + 1):
                    for slots in itertools.combinations(fv, r):
                        params = tuple(v for v in fv if v not in slots)
                        splits.append((slots, params))
                splits.sort(key=lambda sp: (len(sp[0]),
                                            tuple(v.index for v in sp[0])))
            else:
                splits.append((fv, ()))
            for slots, params in splits:
                member = ThetaMember(0, f, slots, params)
                k = member.key()
                if k in seen:
                    continue
                seen.add(k)
                yield f, slots, params

    def member_test(formula, slots, params):
        if not is_first_order(formula) or not slots:
            return False
        if not parameters and params:
            return False
        fo, so = free_variables(formula)
        return not so and fo == set(slots) | set(params)

    name = "all-fo" if parameters else "all-fo-noparams"
    return ThetaFamily(name, sig, gen, arities=None, contains=member_test)


# ---------------------------------------------------------------------------
# Prenex classification
# ---------------------------------------------------------------------------

def prefix_levels(f: Formula) -> tuple:
    """Minimal (existential level, universal level) of the prenex class.

    Levels count quantifier blocks; a formula at existential level s can
    be prenexed into at most s blocks starting with an existential one.
    Quantifier-free formulas are (0, 0).
    """
    if not is_first_order(f):
        raise FormulaError("prenex classification is for first-order formulas")

    def walk(g):
        if isinstance(g, (PredApp, TermEq)):
            return (0, 0)
        if isinstance(g, Not):
            s, p = walk(g.body)
            return (p, s)
        if isinstance(g, And):
            sl, pl = walk(g.left)
            sr, pr = walk(g.right)
            return (max(sl, sr), max(pl, pr))
        if isinstance(g, ForallFO):
            s, p = walk(g.body)
            p2 = min(max(p, 1), s + 1)
            return (p2 + 1, p2)
        raise FormulaError(f"unexpected node {g!r}")

    return walk(normalize(f))


def classify_prefix(f: Formula):
    """Report the minimal prenex class: ('exists'|'forall'|'both', level)."""
    s, p = prefix_levels(f)
    if s == p:
        return ("both", s)
    if s < p:
        return ("exists", s)
    return ("forall", p)


def in_prefix_class(f: Formula, kind: str, level: int) -> bool:
    s, p = prefix_levels(f)
    if kind == "exists":
        return s <= level
    if kind == "forall":
        return p <= level
    raise FormulaError(f"unknown prefix kind {kind!r}")


def prefix_family(sig: Signature, kind: str, level: int) -> ThetaFamily:
    """all_fo filtered to the formulas within one prenex level."""
    base = all_fo(sig)

    def gen():
        for i in itertools.count():
            m = base.member_at(i)
            if in_prefix_class(m.formula, kind, level):
                yield m.formula, m.slots, m.params

    def member_test(formula, slots, params):
        ok = base.contains(formula, slots, params)
        return bool(ok) and in_prefix_class(formula, kind, level)

    short = "exists-n" if kind == "exists" else "forall-n"
    return ThetaFamily(f"{short}:{level}", sig, gen, arities=None,
                       contains=member_test)


# ---------------------------------------------------------------------------
# Custom families from text files
# ---------------------------------------------------------------------------

def load_family(path: str, sig: Signature, name: str = None) -> ThetaFamily:
    """Load a finite family: one `slots ; params ; formula` line per member.

    Slot and parameter fields list variables (params may be empty).  The
    finite list is cycled so the enumerator stays total on the naturals.
    """
    members = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(";")
            if len(parts) != 3:
                raise FormulaError(
                    f"{path}:{lineno}: expected 'slots ; params ; formula'")
            slots = _parse_vars(parts[0], path, lineno)
            params = _parse_vars(parts[1], path, lineno)
            formula = parse(parts[2].strip(), sig)
            members.append((formula, slots, params))
    if not members:
        raise FormulaError(f"{path}: no members")
    arities = {len(s) for _, s, _ in members}

    def gen():
        for i in itertools.count():
            yield members[i % len(members)]

    return ThetaFamily(name or f"file:{path}", sig, gen, arities=arities)


_XVAR = re.compile(r"^x(\d+)$")


def _parse_vars(text: str, path, lineno) -> tuple:
    out = []
    for word in text.split():
        m = _XVAR.match(word)
        if not m:
            raise FormulaError(
                f"{path}:{lineno}: {word!r} is not a canonical variable (use x<n>)")
        out.append(FOVar(int(m.group(1))))
    return tuple(out)


def family_from_cli(spec: str, sig: Signature) -> ThetaFamily:
    """Resolve a `--theta` option value into a family."""
    if spec.startswith("weak-so"):
        k = int(spec.split(":", 1)[1]) if ":" in spec else 1
        return weak_so(sig, k)
    if spec == "dsl":
        return dsl(sig)
    if spec == "all-fo":
        return all_fo(sig)
    if spec == "all-fo-noparams":
        return all_fo(sig, parameters=False)
    if spec.startswith("exists-n:"):
        return prefix_family(sig, "exists", int(spec.split(":", 1)[1]))
    if spec.startswith("forall-n:"):
        return prefix_family(sig, "forall", int(spec.split(":", 1)[1]))
    if spec.startswith("file:"):
        return load_family(spec.split(":", 1)[1], sig)
    raise FormulaError(f"unknown family spec {spec!r}")
