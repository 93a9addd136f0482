"""Derivation trees and rule-by-rule checking for both calculi.

Each node records the data needed to recompute its conclusion from its
premises: occurrence indices into premise conclusions plus whatever the
rule invents (witness terms, weakened formulas, ...).  Conclusions are
laid out canonically: kept premise occurrences in premise order, then the
major occurrence last (identity-style leaves consist of majors only).
Stated conclusions in serialized derivations are checked against the
recomputed ones up to permutation.

The disjunctive calculus shares the node vocabulary: checking against
``Calculus.DISJ`` flips every role-membership side condition, the
identity partition condition and the banged-context shape, which is
exactly the complement construction relating the two rule figures.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import roles as rl
from .roles import RoleSet
from .syntax import (
    Atom,
    Bang,
    Forall,
    Formula,
    IFormula,
    One,
    Sequent,
    Tensor,
    Term,
    With,
    formula_key,
    free_vars,
    subst_formula,
)


class Calculus(enum.Enum):
    CONJ = "conj"
    DISJ = "disj"


class MalformedDerivation(Exception):
    """Node shape broken: bad index, mismatched premise occurrences, ..."""


class RuleViolation(Exception):
    def __init__(self, path: tuple[int, ...], rule: str, reason: str):
        self.path = path
        self.rule = rule
        self.reason = reason
        super().__init__(f"{rule} at {list(path)}: {reason}")


def _require(cond: bool, msg: str):
    if not cond:
        raise MalformedDerivation(msg)


class Derivation:
    """Base node.  Subclasses set ``rule`` and implement ``_compute``."""

    rule: str = "?"
    premises: tuple["Derivation", ...] = ()

    @property
    def concl(self) -> Sequent:
        cached = getattr(self, "_concl", None)
        if cached is None:
            cached = Sequent(tuple(self._compute()))
            object.__setattr__(self, "_concl", cached)
        return cached

    def _compute(self) -> list[IFormula]:
        raise NotImplementedError

    def major_positions(self) -> list[int]:
        return [len(self.concl) - 1]

    def _premise_removed(self, k: int) -> set[int]:
        """Premise-``k`` positions consumed by the rule."""
        return set()

    def context_maps(self) -> list[dict[int, int]]:
        """Per premise, a map conclusion-position -> premise-position.

        Covers exactly the non-major conclusion occurrences that premise
        contributes (shared-context rules cover them in both premises).
        """
        maps = []
        offset = 0
        for k, p in enumerate(self.premises):
            removed = self._premise_removed(k)
            kept = [i for i in range(len(p.concl)) if i not in removed]
            maps.append({offset + j: i for j, i in enumerate(kept)})
            offset += len(kept)
        return maps


# ---------------------------------------------------------------------------
# nodes


@dataclass(frozen=True, eq=False)
class DId(Derivation):
    atom: Formula
    rolesets: tuple[RoleSet, ...]
    rule = "id"
    premises: tuple[Derivation, ...] = ()

    def _compute(self):
        _require(isinstance(self.atom, Atom), "identity concludes atoms only")
        _require(len(self.rolesets) >= 1, "identity needs at least one part")
        return [IFormula(r, self.atom) for r in self.rolesets]

    def major_positions(self):
        return list(range(len(self.rolesets)))


@dataclass(frozen=True, eq=False)
class DOnePos(Derivation):
    rs: RoleSet
    r: int
    rule = "one-pos"
    premises: tuple[Derivation, ...] = ()

    def _compute(self):
        return [IFormula(self.rs, One(self.r))]


@dataclass(frozen=True, eq=False)
class DOneNeg(Derivation):
    rs: RoleSet
    r: int
    premise: Derivation
    rule = "one-neg"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        return list(self.premise.concl.items) + [IFormula(self.rs, One(self.r))]


@dataclass(frozen=True, eq=False)
class DTensorNeg(Derivation):
    r: int
    premise: Derivation
    i: int
    j: int
    rule = "tensor-neg"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        items = self.premise.concl.items
        _require(0 <= self.i < len(items) and 0 <= self.j < len(items), "index out of range")
        _require(self.i != self.j, "needs two distinct occurrences")
        a, b = items[self.i], items[self.j]
        _require(a.roles == b.roles, "occurrences carry different role sets")
        ctx = [f for k, f in enumerate(items) if k not in (self.i, self.j)]
        return ctx + [IFormula(a.roles, Tensor(self.r, a.body, b.body))]

    def _premise_removed(self, k):
        return {self.i, self.j}


@dataclass(frozen=True, eq=False)
class DTensorPos(Derivation):
    r: int
    left: Derivation
    i: int
    right: Derivation
    j: int
    rule = "tensor-pos"

    @property
    def premises(self):
        return (self.left, self.right)

    def _compute(self):
        li, ri = self.left.concl.items, self.right.concl.items
        _require(0 <= self.i < len(li) and 0 <= self.j < len(ri), "index out of range")
        a, b = li[self.i], ri[self.j]
        _require(a.roles == b.roles, "occurrences carry different role sets")
        ctx = [f for k, f in enumerate(li) if k != self.i]
        ctx += [f for k, f in enumerate(ri) if k != self.j]
        return ctx + [IFormula(a.roles, Tensor(self.r, a.body, b.body))]

    def _premise_removed(self, k):
        return {self.i} if k == 0 else {self.j}


@dataclass(frozen=True, eq=False)
class DWithNegL(Derivation):
    r: int
    other: Formula
    premise: Derivation
    i: int
    rule = "with-neg-l"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        items = self.premise.concl.items
        _require(0 <= self.i < len(items), "index out of range")
        a = items[self.i]
        ctx = [f for k, f in enumerate(items) if k != self.i]
        return ctx + [IFormula(a.roles, With(self.r, a.body, self.other))]

    def _premise_removed(self, k):
        return {self.i}


@dataclass(frozen=True, eq=False)
class DWithNegR(Derivation):
    r: int
    other: Formula
    premise: Derivation
    i: int
    rule = "with-neg-r"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        items = self.premise.concl.items
        _require(0 <= self.i < len(items), "index out of range")
        b = items[self.i]
        ctx = [f for k, f in enumerate(items) if k != self.i]
        return ctx + [IFormula(b.roles, With(self.r, self.other, b.body))]

    def _premise_removed(self, k):
        return {self.i}


@dataclass(frozen=True, eq=False)
class DWithPos(Derivation):
    r: int
    left: Derivation
    i: int
    right: Derivation
    j: int
    rule = "with-pos"

    @property
    def premises(self):
        return (self.left, self.right)

    def _compute(self):
        li, ri = self.left.concl.items, self.right.concl.items
        _require(0 <= self.i < len(li) and 0 <= self.j < len(ri), "index out of range")
        a, b = li[self.i], ri[self.j]
        _require(a.roles == b.roles, "occurrences carry different role sets")
        ctx1 = [f for k, f in enumerate(li) if k != self.i]
        ctx2 = [f for k, f in enumerate(ri) if k != self.j]
        _require(
            sorted(f.key() for f in ctx1) == sorted(f.key() for f in ctx2),
            "branch contexts differ",
        )
        return ctx1 + [IFormula(a.roles, With(self.r, a.body, b.body))]

    def _premise_removed(self, k):
        return {self.i} if k == 0 else {self.j}

    def context_maps(self):
        # Shared context: every conclusion occurrence maps into both branches;
        # the second branch is matched greedily by value.
        kept1 = [i for i in range(len(self.left.concl)) if i != self.i]
        kept2 = [i for i in range(len(self.right.concl)) if i != self.j]
        m1 = {pos: i for pos, i in enumerate(kept1)}
        m2: dict[int, int] = {}
        unused = list(kept2)
        for pos, i in enumerate(kept1):
            want = self.left.concl[i].key()
            for j in unused:
                if self.right.concl[j].key() == want:
                    m2[pos] = j
                    unused.remove(j)
                    break
        return [m1, m2]


@dataclass(frozen=True, eq=False)
class DBangPos(Derivation):
    r: int
    premise: Derivation
    i: int
    rule = "bang-pos"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        items = self.premise.concl.items
        _require(0 <= self.i < len(items), "index out of range")
        a = items[self.i]
        ctx = [f for k, f in enumerate(items) if k != self.i]
        return ctx + [IFormula(a.roles, Bang(self.r, a.body))]

    def _premise_removed(self, k):
        return {self.i}


@dataclass(frozen=True, eq=False)
class DBangNegWeaken(Derivation):
    r: int
    rs: RoleSet
    body: Formula
    premise: Derivation
    rule = "bang-neg-weaken"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        return list(self.premise.concl.items) + [IFormula(self.rs, Bang(self.r, self.body))]


@dataclass(frozen=True, eq=False)
class DBangNegDerelict(Derivation):
    r: int
    premise: Derivation
    i: int
    rule = "bang-neg-derelict"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        items = self.premise.concl.items
        _require(0 <= self.i < len(items), "index out of range")
        a = items[self.i]
        ctx = [f for k, f in enumerate(items) if k != self.i]
        return ctx + [IFormula(a.roles, Bang(self.r, a.body))]

    def _premise_removed(self, k):
        return {self.i}


@dataclass(frozen=True, eq=False)
class DBangNegContract(Derivation):
    premise: Derivation
    i: int
    j: int
    rule = "bang-neg-contract"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        items = self.premise.concl.items
        _require(0 <= self.i < len(items) and 0 <= self.j < len(items), "index out of range")
        _require(self.i != self.j, "needs two distinct occurrences")
        a, b = items[self.i], items[self.j]
        _require(a == b, "contracted occurrences differ")
        _require(isinstance(a.body, Bang), "only banged formulas contract")
        ctx = [f for k, f in enumerate(items) if k not in (self.i, self.j)]
        return ctx + [a]

    def _premise_removed(self, k):
        return {self.i, self.j}


@dataclass(frozen=True, eq=False)
class DForallNeg(Derivation):
    r: int
    var: str
    body: Formula
    witness: Term
    premise: Derivation
    i: int
    rule = "forall-neg"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        items = self.premise.concl.items
        _require(0 <= self.i < len(items), "index out of range")
        a = items[self.i]
        ctx = [f for k, f in enumerate(items) if k != self.i]
        return ctx + [IFormula(a.roles, Forall(self.r, self.var, self.body))]

    def _premise_removed(self, k):
        return {self.i}


@dataclass(frozen=True, eq=False)
class DForallPos(Derivation):
    r: int
    eigen: str
    premise: Derivation
    i: int
    rule = "forall-pos"

    @property
    def premises(self):
        return (self.premise,)

    def _compute(self):
        items = self.premise.concl.items
        _require(0 <= self.i < len(items), "index out of range")
        a = items[self.i]
        ctx = [f for k, f in enumerate(items) if k != self.i]
        return ctx + [IFormula(a.roles, Forall(self.r, self.eigen, a.body))]

    def _premise_removed(self, k):
        return {self.i}


# ---------------------------------------------------------------------------
# checking

# Rules whose role index must belong to the occurrence's role set in the
# conjunctive reading; the disjunctive reading flips every test.
_CONJ_MEMBER_RULES = frozenset({"one-pos", "tensor-pos", "with-pos", "bang-pos", "forall-pos"})
_CONJ_NONMEMBER_RULES = frozenset(
    {
        "one-neg",
        "tensor-neg",
        "with-neg-l",
        "with-neg-r",
        "bang-neg-weaken",
        "bang-neg-derelict",
        "bang-neg-contract",
        "forall-neg",
    }
)

# Display labels, keyed by (rule, calculus).
RULE_LABELS = {
    Calculus.CONJ: {
        "id": "Id/\\",
        "tensor-neg": "*-neg",
        "tensor-pos": "*-pos",
        "with-neg-l": "&-neg-l",
        "with-neg-r": "&-neg-r",
        "with-pos": "&-pos",
        "bang-pos": "!-pos",
        "bang-neg-weaken": "!-neg-weaken",
        "bang-neg-derelict": "!-neg-derelict",
        "bang-neg-contract": "!-neg-contract",
        "forall-neg": "all-neg",
        "forall-pos": "all-pos",
        "one-neg": "1-neg",
        "one-pos": "1-pos",
    },
    Calculus.DISJ: {
        "id": "Id\\/",
        "tensor-neg": "par-pos",
        "tensor-pos": "par-neg",
        "with-neg-l": "plus-pos-l",
        "with-neg-r": "plus-pos-r",
        "with-pos": "plus-neg",
        "bang-pos": "?-neg",
        "bang-neg-weaken": "?-pos-weaken",
        "bang-neg-derelict": "?-pos-derelict",
        "bang-neg-contract": "?-pos-contract",
        "forall-neg": "exists-pos",
        "forall-pos": "exists-neg",
        "one-neg": "co-1-pos",
        "one-pos": "co-1-neg",
    },
}


def _wants_member(rule: str, calc: Calculus) -> bool:
    conj_member = rule in _CONJ_MEMBER_RULES
    return conj_member if calc is Calculus.CONJ else not conj_member


def is_query_shaped(item: IFormula, calc: Calculus) -> bool:
    """True iff the i-formula reads as a ?-formula in the given calculus."""
    if not isinstance(item.body, Bang):
        return False
    member = item.body.r in item.roles
    return member if calc is Calculus.DISJ else not member


def height(d: Derivation) -> int:
    if not d.premises:
        return 1
    return 1 + max(height(p) for p in d.premises)


def check(d: Derivation, calc: Calculus = Calculus.CONJ) -> Sequent:
    """Validate every node; returns the root conclusion or raises RuleViolation."""
    _check_node(d, calc, ())
    return d.concl


def _fail(path, d, reason):
    raise RuleViolation(path, d.rule, reason)


def _check_node(d: Derivation, calc: Calculus, path: tuple[int, ...]):
    for k, p in enumerate(d.premises):
        _check_node(p, calc, path + (k,))
    try:
        concl = d.concl
    except MalformedDerivation as e:
        _fail(path, d, f"malformed: {e}")

    label = RULE_LABELS[calc][d.rule]
    match d:
        case DId(atom=_, rolesets=rss):
            parts = list(rss) if calc is Calculus.CONJ else [rl.complement(s) for s in rss]
            if not rl.is_partition_of_full(parts):
                _fail(path, d, f"({label}) role sets do not partition the base")
        case DOnePos(rs=rs, r=r) | DOneNeg(rs=rs, r=r):
            if (r in rs) != _wants_member(d.rule, calc):
                _fail(path, d, f"({label}) wrong polarity for role {r} in {rs}")
        case DBangNegWeaken(r=r, rs=rs):
            if (r in rs) != _wants_member(d.rule, calc):
                _fail(path, d, f"({label}) wrong polarity for role {r} in {rs}")
        case DBangNegContract():
            a = concl[d.major_positions()[0]]
            if (a.body.r in a.roles) != _wants_member(d.rule, calc):
                _fail(path, d, f"({label}) wrong polarity for role {a.body.r} in {a.roles}")
        case _:
            a = concl[d.major_positions()[0]]
            if (d.r in a.roles) != _wants_member(d.rule, calc):
                _fail(path, d, f"({label}) wrong polarity for role {d.r} in {a.roles}")

    match d:
        case DBangPos():
            for k, f in enumerate(concl.items[:-1]):
                if not is_query_shaped(f, calc):
                    _fail(path, d, f"({label}) context item {k} is not ?-shaped: {f.body}")
        case DForallPos(eigen=x, i=i):
            ctx_vars = frozenset()
            for k, f in enumerate(d.premise.concl.items):
                if k != i:
                    ctx_vars |= free_vars(f.body)
            if x in ctx_vars:
                _fail(path, d, f"({label}) eigenvariable {x} occurs free in the context")
        case DForallNeg(var=x, body=body, witness=t, i=i):
            expected = subst_formula(body, x, t)
            got = d.premise.concl[i].body
            if formula_key(expected) != formula_key(got):
                _fail(path, d, f"({label}) premise is not the stated instance: {got}")


def checks(d: Derivation, calc: Calculus = Calculus.CONJ) -> bool:
    try:
        check(d, calc)
        return True
    except RuleViolation:
        return False
    except MalformedDerivation:
        return False


# ---------------------------------------------------------------------------
# duality


def dualize(d: Derivation) -> Derivation:
    """Complement every role set; valid conjunctive proofs become disjunctive."""
    match d:
        case DId(atom=a, rolesets=rss):
            return DId(a, tuple(rl.complement(s) for s in rss))
        case DOnePos(rs=rs, r=r):
            return DOnePos(rl.complement(rs), r)
        case DOneNeg(rs=rs, r=r, premise=p):
            return DOneNeg(rl.complement(rs), r, dualize(p))
        case DTensorNeg(r=r, premise=p, i=i, j=j):
            return DTensorNeg(r, dualize(p), i, j)
        case DTensorPos(r=r, left=l, i=i, right=rp, j=j):
            return DTensorPos(r, dualize(l), i, dualize(rp), j)
        case DWithNegL(r=r, other=o, premise=p, i=i):
            return DWithNegL(r, o, dualize(p), i)
        case DWithNegR(r=r, other=o, premise=p, i=i):
            return DWithNegR(r, o, dualize(p), i)
        case DWithPos(r=r, left=l, i=i, right=rp, j=j):
            return DWithPos(r, dualize(l), i, dualize(rp), j)
        case DBangPos(r=r, premise=p, i=i):
            return DBangPos(r, dualize(p), i)
        case DBangNegWeaken(r=r, rs=rs, body=b, premise=p):
            return DBangNegWeaken(r, rl.complement(rs), b, dualize(p))
        case DBangNegDerelict(r=r, premise=p, i=i):
            return DBangNegDerelict(r, dualize(p), i)
        case DBangNegContract(premise=p, i=i, j=j):
            return DBangNegContract(dualize(p), i, j)
        case DForallNeg(r=r, var=v, body=b, witness=t, premise=p, i=i):
            return DForallNeg(r, v, b, t, dualize(p), i)
        case DForallPos(r=r, eigen=x, premise=p, i=i):
            return DForallPos(r, x, dualize(p), i)
    raise TypeError(d)
