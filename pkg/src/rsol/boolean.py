"""Presented Boolean algebras, regular families, compatible ultrafilters.

The carriers are desk-scale: powersets, free algebras with truth-table
equality, and the finite-cofinite algebra over the naturals.  The chain
construction in `rs_construct` produces an ultrafilter approximation that
respects every designated join and meet of a regular family while
avoiding a chosen non-unit element.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional


class AlgebraError(ValueError):
    pass


class BudgetExhausted(AlgebraError):
    def __init__(self, entry_name: str):
        super().__init__(f"enumeration budget exhausted for entry {entry_name!r}")
        self.entry_name = entry_name


class BoundRefuted(AlgebraError):
    def __init__(self, entry_name: str):
        super().__init__(f"claimed bound refuted for entry {entry_name!r}")
        self.entry_name = entry_name


class BooleanAlgebra:
    """Operations plus decidable equality; subclasses fix the element type."""

    zero = None
    one = None

    def meet(self, a, b):
        raise NotImplementedError

    def join(self, a, b):
        raise NotImplementedError

    def complement(self, a):
        raise NotImplementedError

    def eq(self, a, b) -> bool:
        raise NotImplementedError

    def le(self, a, b) -> bool:
        return self.eq(self.meet(a, b), a)

    def is_zero(self, a) -> bool:
        return self.eq(a, self.zero)

    def elements(self) -> Optional[list]:
        """Full carrier for finite algebras, None otherwise."""
        return None

    def enumerate_elements(self) -> Iterator:
        els = self.elements()
        if els is None:
            raise AlgebraError(f"{self!r} has no element enumerator")
        return iter(els)

    def meet_all(self, items):
        out = self.one
        for a in items:
            out = self.meet(out, a)
        return out

    def join_all(self, items):
        out = self.zero
        for a in items:
            out = self.join(out, a)
        return out

    def check_laws(self, triples) -> None:
        """Assert absorption, distributivity and complementation on samples."""
        for a, b, c in triples:
            assert self.eq(self.meet(a, self.join(a, b)), a)
            assert self.eq(self.join(a, self.meet(a, b)), a)
            assert self.eq(self.meet(a, self.join(b, c)),
                           self.join(self.meet(a, b), self.meet(a, c)))
            assert self.eq(self.join(a, self.meet(b, c)),
                           self.meet(self.join(a, b), self.join(a, c)))
            assert self.eq(self.join(a, self.complement(a)), self.one)
            assert self.eq(self.meet(a, self.complement(a)), self.zero)


class PowersetAlgebra(BooleanAlgebra):
    """Subsets of a finite atom set, as frozensets."""

    MAX_ATOMS_ENUMERATED = 20

    def __init__(self, atoms: Iterable):
        self.atoms = tuple(atoms)
        if len(set(self.atoms)) != len(self.atoms):
            raise AlgebraError("duplicate atoms")
        self.zero = frozenset()
        self.one = frozenset(self.atoms)

    def meet(self, a, b):
        return a & b

    def join(self, a, b):
        return a | b

    def complement(self, a):
        return self.one - a

    def eq(self, a, b):
        return a == b

    def elements(self):
        if len(self.atoms) > self.MAX_ATOMS_ENUMERATED:
            raise AlgebraError(
                f"powerset over {len(self.atoms)} atoms is too large to enumerate")
        out = []
        for mask in range(1 << len(self.atoms)):
            out.append(frozenset(a for i, a in enumerate(self.atoms) if mask >> i & 1))
        return out

    def __repr__(self):
        return f"PowersetAlgebra({len(self.atoms)} atoms)"


def powerset_algebra(n: int) -> PowersetAlgebra:
    if not 0 < n <= 5:
        raise AlgebraError("powerset builtin supports 1..5 atoms")
    return PowersetAlgebra(range(n))


class FreeBooleanAlgebra(BooleanAlgebra):
    """Free algebra on g generators; an element is its truth table.

    The table is an int bitmask over the 2^g valuations, so equality is
    exhaustive valuation and the operations are bitwise.
    """

    def __init__(self, generators: int):
        if not 0 < generators <= 16:
            raise AlgebraError("free algebra builtin supports 1..16 generators")
        self.generators = generators
        self.width = 1 << generators
        self.zero = 0
        self.one = (1 << self.width) - 1

    def generator(self, i: int) -> int:
        if not 0 <= i < self.generators:
            raise AlgebraError(f"no generator {i}")
        mask = 0
        for valuation in range(self.width):
            if valuation >> i & 1:
                mask |= 1 << valuation
        return mask

    def meet(self, a, b):
        return a & b

    def join(self, a, b):
        return a | b

    def complement(self, a):
        return self.one ^ a

    def eq(self, a, b):
        return a == b

    def elements(self):
        if self.generators > 4:
            raise AlgebraError("free algebra carrier too large to enumerate")
        return list(range(self.one + 1))

    def __repr__(self):
        return f"FreeBooleanAlgebra({self.generators})"


def free_algebra(g: int) -> FreeBooleanAlgebra:
    return FreeBooleanAlgebra(g)


class FiniteCofiniteAlgebra(BooleanAlgebra):
    """Finite and cofinite subsets of the naturals.

    Elements are ('fin', S) or ('cof', S) with S a frozenset; ('cof', S)
    stands for the complement of S.  Countable, with a fair enumerator.
    """

    def __init__(self):
        self.zero = ("fin", frozenset())
        self.one = ("cof", frozenset())

    @staticmethod
    def fin(items) -> tuple:
        return ("fin", frozenset(items))

    @staticmethod
    def cof(items) -> tuple:
        return ("cof", frozenset(items))

    def atom(self, n: int) -> tuple:
        return ("fin", frozenset((n,)))

    def is_finite_element(self, a) -> bool:
        return a[0] == "fin"

    def meet(self, a, b):
        ka, sa = a
        kb, sb = b
        if ka == "fin" and kb == "fin":
            return ("fin", sa & sb)
        if ka == "fin":
            return ("fin", sa - sb)
        if kb == "fin":
            return ("fin", sb - sa)
        return ("cof", sa | sb)

    def join(self, a, b):
        return self.complement(self.meet(self.complement(a), self.complement(b)))

    def complement(self, a):
        kind, s = a
        return ("cof", s) if kind == "fin" else ("fin", s)

    def eq(self, a, b):
        return a == b

    def enumerate_elements(self) -> Iterator:
        yield self.zero
        yield self.one
        for bound in itertools.count(1):
            top = bound - 1
            for rest_mask in range(1 << top):
                body = frozenset(
                    [top] + [i for i in range(top) if rest_mask >> i & 1])
                yield ("fin", body)
                yield ("cof", body)

    def __repr__(self):
        return "FiniteCofiniteAlgebra()"


def builtin_algebras() -> dict:
    """Factories for the supported carriers, keyed by CLI name."""
    return {
        "powerset": powerset_algebra,
        "free": free_algebra,
        "fincof": FiniteCofiniteAlgebra,
    }


# ---------------------------------------------------------------------------
# Regular families
# ---------------------------------------------------------------------------

@dataclass
class RegularEntry:
    """A subset with a designated join or meet.

    Finite entries carry their members; infinite ones an enumerator
    factory.  `trusted` marks bounds that were only prefix-verified.
    `members_all_finite` is a structural note used on the finite-cofinite
    carrier: it certifies that every member is a finite element, which
    makes some incompatibilities provable without exhausting the entry.
    """
    kind: str                     # 'join' | 'meet'
    bound: object
    members: Optional[tuple] = None
    enumerator: Optional[Callable[[], Iterator]] = None
    name: str = ""
    trusted: bool = False
    members_all_finite: bool = False

    def __post_init__(self):
        if self.kind not in ("join", "meet"):
            raise AlgebraError(f"entry kind must be join or meet, got {self.kind!r}")
        if (self.members is None) == (self.enumerator is None):
            raise AlgebraError("exactly one of members/enumerator must be given")
        if self.members is not None:
            self.members = tuple(self.members)

    @property
    def finite(self) -> bool:
        return self.members is not None

    def iter_members(self) -> Iterator:
        if self.members is not None:
            return iter(self.members)
        return self.enumerator()


@dataclass
class EntryVerdict:
    status: str                   # 'exact' | 'prefix' | 'violation'
    checked: int
    violation_index: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.status != "violation"


def verify_entry(alg: BooleanAlgebra, entry: RegularEntry, prefix: int = 64) -> EntryVerdict:
    """Check the claimed bound: exactly for finite entries, else on a prefix.

    For an infinite join entry the bound must dominate every inspected
    member; if the inspected members already join up to the bound the
    claim is exact after all.
    """
    up = entry.kind == "join"
    acc = alg.zero if up else alg.one
    count = 0
    for i, s in enumerate(entry.iter_members()):
        if not entry.finite and i >= prefix:
            return EntryVerdict("prefix", count)
        ok = alg.le(s, entry.bound) if up else alg.le(entry.bound, s)
        if not ok:
            return EntryVerdict("violation", count, violation_index=i)
        acc = alg.join(acc, s) if up else alg.meet(acc, s)
        count += 1
        if not entry.finite and alg.eq(acc, entry.bound):
            return EntryVerdict("exact", count)
    if alg.eq(acc, entry.bound):
        return EntryVerdict("exact", count)
    return EntryVerdict("violation", count, violation_index=None)


# ---------------------------------------------------------------------------
# Ultrafilters
# ---------------------------------------------------------------------------

def is_ultrafilter(alg: BooleanAlgebra, u) -> bool:
    """Exhaustive check of the four clauses; the algebra must be finite."""
    elements = alg.elements()
    if elements is None:
        raise AlgebraError("exhaustive check needs a finite algebra")
    members = [e for e in elements if any(alg.eq(e, x) for x in u)]
    if not any(alg.eq(alg.one, x) for x in members):
        return False
    if any(alg.eq(alg.zero, x) for x in members):
        return False
    for a in members:
        for b in members:
            if not any(alg.eq(alg.meet(a, b), x) for x in members):
                return False
    for a in members:
        for b in elements:
            if alg.le(a, b) and not any(alg.eq(b, x) for x in members):
                return False
    for a in elements:
        ina = any(alg.eq(a, x) for x in members)
        inc = any(alg.eq(alg.complement(a), x) for x in members)
        if ina == inc:
            return False
    return True


def check_ultrafilter_on_samples(alg: BooleanAlgebra, member: Callable, samples) -> bool:
    """Clause check on a provided element sample (for countable carriers)."""
    if not member(alg.one) or member(alg.zero):
        return False
    samples = list(samples)
    for a in samples:
        if member(a) == member(alg.complement(a)):
            return False
        for b in samples:
            if member(a) and member(b) and not member(alg.meet(a, b)):
                return False
            if member(a) and alg.le(a, b) and not member(b):
                return False
    return True


@dataclass
class CompatVerdict:
    status: str                   # 'true' | 'false' | 'inconclusive'
    inspected: int
    witness: object = None
    reason: str = ""


def check_f_compatible(alg: BooleanAlgebra, member: Callable, entry: RegularEntry,
                       budget: int = 10_000) -> CompatVerdict:
    """Decide whether an ultrafilter (given by membership) respects an entry.

    Join entries: the bound is in the filter iff some member is.  A
    member in the filter while the bound is not is a definitive failure
    (members sit below the bound).  For an in-filter bound the search for
    a member witness is budgeted; running out is inconclusive unless the
    entry is finite or the membership procedure structurally rules out
    all members (`rules_out`).  Meet entries are dual.
    """
    up = entry.kind == "join"
    bound_in = member(entry.bound)
    rules_out = getattr(member, "rules_out", None)

    def scan(want: bool):
        """First member whose filter membership equals `want`, within budget."""
        count = 0
        for s in entry.iter_members():
            if count >= budget:
                return None, count, True
            count += 1
            if member(s) == want:
                return s, count, False
        return None, count, False

    if up:
        if bound_in:
            witness, seen, cut = scan(True)
            if witness is not None:
                return CompatVerdict("true", seen, witness=witness)
            if not cut:
                return CompatVerdict("false", seen,
                                     reason="bound in filter, no member is")
            if rules_out is not None and rules_out(entry):
                return CompatVerdict("false", seen,
                                     reason="bound in filter, members provably out")
            return CompatVerdict("inconclusive", seen, reason="budget")
        witness, seen, cut = scan(True)
        if witness is not None:
            return CompatVerdict("false", seen, witness=witness,
                                 reason="member in filter forces the join in")
        # no member can sit in an upward-closed filter missing the bound
        return CompatVerdict("true", seen, reason="upward closure")
    if bound_in:
        # upward closure settles every member at once
        return CompatVerdict("true", 0, reason="meet in filter bounds all members")
    witness, seen, cut = scan(False)
    if witness is not None:
        return CompatVerdict("true", seen, witness=witness)
    if not cut:
        return CompatVerdict("false", seen,
                             reason="all members in filter, meet is not")
    return CompatVerdict("inconclusive", seen, reason="budget")


# ---------------------------------------------------------------------------
# The decreasing-chain construction
# ---------------------------------------------------------------------------

@dataclass
class ChainStep:
    entry_name: str
    action: str                   # 'bound-side' | 'witness' | 'decide'
    element: object
    value: object


class Membership:
    """Total membership procedure for the constructed ultrafilter."""

    def __init__(self, alg: BooleanAlgebra, final):
        self.alg = alg
        self.final = final

    def __call__(self, x) -> bool:
        return self.alg.le(self.final, x)


class PrincipalCofiniteMembership:
    """The cofinite ultrafilter on the finite-cofinite algebra."""

    def __init__(self, alg: FiniteCofiniteAlgebra):
        self.alg = alg

    def __call__(self, x) -> bool:
        return not self.alg.is_finite_element(x)

    def rules_out(self, entry: RegularEntry) -> bool:
        # no finite element is cofinite, so an all-finite entry never meets U
        return entry.members_all_finite


@dataclass
class UltrafilterApprox:
    chain: list
    steps: list
    decided: dict
    final: object
    membership: Membership

    def excludes(self, element) -> bool:
        return not self.membership(element)


def rs_construct(alg: BooleanAlgebra, entries, avoid, enumeration=None,
                 decide_steps: Optional[int] = None,
                 witness_budget: int = 10_000) -> UltrafilterApprox:
    """Build a decreasing chain deciding every entry and avoiding `avoid`.

    Starting from the complement of the avoided element, each join entry
    either forces the bound's complement into the chain or commits to a
    member witness (one must overlap the chain when the chain sits below
    the bound, because the bound distributes over the chain element);
    meet entries are dual.  Element decisions from `enumeration` are
    interleaved one per entry, then continued until `decide_steps` is
    exhausted.  Every chain element stays nonzero, so the emitted
    membership procedure is an ultrafilter on the decided fragment.
    """
    if alg.eq(avoid, alg.one):
        raise AlgebraError("cannot avoid the unit element")
    b = alg.complement(avoid)
    chain = [b]
    steps: list = []
    decided: dict = {}

    if enumeration is None:
        try:
            enum_iter = alg.enumerate_elements()
        except AlgebraError:
            enum_iter = iter(())
    else:
        enum_iter = iter(enumeration)
    if decide_steps is None:
        decide_steps = len(alg.elements() or []) or 64

    decided_count = 0

    def decide_one():
        nonlocal b, decided_count
        for e in enum_iter:
            key = e
            if key in decided:
                continue
            low = alg.meet(b, e)
            if not alg.is_zero(low):
                b = low
                decided[key] = True
                steps.append(ChainStep("", "decide", e, True))
            else:
                b = alg.meet(b, alg.complement(e))
                decided[key] = False
                steps.append(ChainStep("", "decide", e, False))
            chain.append(b)
            decided_count += 1
            return True
        return False

    for entry in entries:
        up = entry.kind == "join"
        c = entry.bound
        blocker = alg.complement(c) if up else c
        low = alg.meet(b, blocker)
        if not alg.is_zero(low):
            b = low
            steps.append(ChainStep(entry.name, "bound-side", blocker, None))
        else:
            found = False
            for i, s in enumerate(entry.iter_members()):
                if i >= witness_budget:
                    raise BudgetExhausted(entry.name)
                cand = alg.meet(b, s) if up else alg.meet(b, alg.complement(s))
                if not alg.is_zero(cand):
                    b = cand
                    steps.append(ChainStep(entry.name, "witness", s, None))
                    found = True
                    break
            if not found:
                # a finite entry ran dry although b sat under the claimed
                # bound; the designated join/meet cannot be correct
                raise BoundRefuted(entry.name)
        chain.append(b)
        if decided_count < decide_steps:
            decide_one()

    while decided_count < decide_steps:
        if not decide_one():
            break

    membership = Membership(alg, b)
    return UltrafilterApprox(chain=chain, steps=steps, decided=decided,
                             final=b, membership=membership)


def powerset_full_family(alg: PowersetAlgebra) -> list:
    """Every subset of the carrier as both a join and a meet entry."""
    elements = alg.elements()
    entries = []
    for i, subset in enumerate(_subsets(elements)):
        entries.append(RegularEntry("join", alg.join_all(subset),
                                    members=tuple(subset), name=f"join{i}"))
        entries.append(RegularEntry("meet", alg.meet_all(subset),
                                    members=tuple(subset), name=f"meet{i}"))
    return entries


def _subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def fincof_atoms_entry(alg: FiniteCofiniteAlgebra) -> RegularEntry:
    """All singletons with their true join (the unit)."""
    def atoms():
        return (alg.atom(n) for n in itertools.count())

    return RegularEntry("join", alg.one, enumerator=atoms, name="atoms",
                        trusted=True, members_all_finite=True)
