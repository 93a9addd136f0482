"""The session-typed process calculus over the multirole kernel.

Process terms carry Church-style annotations (role sets on headers, a type
on each cut) that typechecking consumes and reduction ignores.  Reduction is
pure term rewriting: principal cuts fire the communication they stand for,
non-principal cuts are pushed under unrelated headers by commuting
conversions, and nested cuts are reduced leftmost-first.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import roles as rl
from .roles import RoleBase, RoleSet
from .derivation import (
    Calculus,
    DBangNegContract,
    DBangNegDerelict,
    DBangNegWeaken,
    DBangPos,
    DOneNeg,
    DOnePos,
    DTensorNeg,
    DTensorPos,
    DWithNegL,
    DWithNegR,
    DWithPos,
    Derivation,
)
from .syntax import (
    Bang,
    Formula,
    IFormula,
    One,
    Sequent,
    Tensor,
    With,
    formula_key,
    fresh_name,
    is_session_type,
)


# ---------------------------------------------------------------------------
# the point-to-point transfer type


@dataclass(frozen=True, eq=False)
class Msg(Formula):
    """Transfer from role r's side to role s's side within a session."""

    r: int
    s: int
    body: Formula

    def __post_init__(self):
        if self.r == self.s:
            raise ValueError("transfer endpoints must be distinct roles")

    def _key(self, env):
        return ("msg", self.r, self.s, self.body._key(env))


def is_proc_type(a: Formula) -> bool:
    """Session types extended with the transfer constructor."""
    match a:
        case One():
            return True
        case Tensor(_, left, right) | With(_, left, right):
            return is_proc_type(left) and is_proc_type(right)
        case Bang(_, body):
            return is_proc_type(body)
        case Msg(_, _, body):
            return is_proc_type(body)
        case _:
            return False


# ---------------------------------------------------------------------------
# process terms


class Process:
    __slots__ = ()


@dataclass(frozen=True)
class Cut(Process):
    x: str
    ann: Formula | None
    parts: tuple[Process, ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("a cut links at least one process")


@dataclass(frozen=True)
class OutName(Process):  # x{R}[y]@r.P , binds y in body
    x: str
    rs: RoleSet
    y: str
    r: int
    body: Process


@dataclass(frozen=True)
class InName(Process):  # x{R}(y)@r.(P1|P2) , binds y in left only
    x: str
    rs: RoleSet
    y: str
    r: int
    left: Process
    right: Process


@dataclass(frozen=True)
class OutEmpty(Process):  # x{R}[]@r.P
    x: str
    rs: RoleSet
    r: int
    body: Process


@dataclass(frozen=True)
class InEmpty(Process):  # x{R}()@r.end
    x: str
    rs: RoleSet
    r: int


@dataclass(frozen=True)
class SelL(Process):  # x{R}[inl]@r.P
    x: str
    rs: RoleSet
    r: int
    body: Process


@dataclass(frozen=True)
class SelR(Process):  # x{R}[inr]@r.P
    x: str
    rs: RoleSet
    r: int
    body: Process


@dataclass(frozen=True)
class Case(Process):  # x{R}(case)@r.(P1,P2)
    x: str
    rs: RoleSet
    r: int
    left: Process
    right: Process


@dataclass(frozen=True)
class ServerAccept(Process):  # !x{R}(y)@r.P , binds y
    x: str
    rs: RoleSet
    y: str
    r: int
    body: Process


@dataclass(frozen=True)
class ClientRequest(Process):  # ?x{R}[y]@r.P , binds y
    x: str
    rs: RoleSet
    y: str
    r: int
    body: Process


@dataclass(frozen=True)
class MsgSkipIn(Process):  # x{R}(skip)@{r,s}.P
    x: str
    rs: RoleSet
    r: int
    s: int
    body: Process


@dataclass(frozen=True)
class MsgSkipOut(Process):  # x{R}[skip]@{r,s}.P
    x: str
    rs: RoleSet
    r: int
    s: int
    body: Process


@dataclass(frozen=True)
class MsgRecv(Process):  # x{R}(recv)@{r,s}.P
    x: str
    rs: RoleSet
    r: int
    s: int
    body: Process


@dataclass(frozen=True)
class MsgSend(Process):  # x{R}[send]@{r,s}.P
    x: str
    rs: RoleSet
    r: int
    s: int
    body: Process


_UNARY_MSG = (MsgSkipIn, MsgSkipOut, MsgRecv, MsgSend)


def free_names(p: Process) -> frozenset[str]:
    match p:
        case Cut(x, _, parts):
            out = frozenset()
            for q in parts:
                out |= free_names(q)
            return out - {x}
        case OutName(x, _, y, _, body) | ServerAccept(x, _, y, _, body) | ClientRequest(
            x, _, y, _, body
        ):
            return {x} | (free_names(body) - {y})
        case InName(x, _, y, _, left, right):
            return {x} | (free_names(left) - {y}) | free_names(right)
        case OutEmpty(x, _, _, body) | SelL(x, _, _, body) | SelR(x, _, _, body):
            return {x} | free_names(body)
        case InEmpty(x, _, _):
            return frozenset((x,))
        case Case(x, _, _, left, right):
            return {x} | free_names(left) | free_names(right)
        case MsgSkipIn(x, _, _, _, body) | MsgSkipOut(x, _, _, _, body) | MsgRecv(
            x, _, _, _, body
        ) | MsgSend(x, _, _, _, body):
            return {x} | free_names(body)
    raise TypeError(p)


def rename_free(p: Process, old: str, new: str) -> Process:
    """Capture-avoiding renaming of the free name ``old`` to ``new``."""
    if old == new:
        return p

    def rn(n: str) -> str:
        return new if n == old else n

    match p:
        case Cut(x, ann, parts):
            if x == old:
                return p
            if x == new:
                x2 = fresh_name(x)
                parts = tuple(rename_free(q, x, x2) for q in parts)
                x = x2
            return Cut(x, ann, tuple(rename_free(q, old, new) for q in parts))
        case OutName(x, rs, y, r, body) | ServerAccept(x, rs, y, r, body) | ClientRequest(
            x, rs, y, r, body
        ):
            if y == new:
                y2 = fresh_name(y)
                body = rename_free(body, y, y2)
                y = y2
            body2 = body if y == old else rename_free(body, old, new)
            return type(p)(rn(x), rs, y, r, body2)
        case InName(x, rs, y, r, left, right):
            if y == new:
                y2 = fresh_name(y)
                left = rename_free(left, y, y2)
                y = y2
            left2 = left if y == old else rename_free(left, old, new)
            return InName(rn(x), rs, y, r, left2, rename_free(right, old, new))
        case OutEmpty(x, rs, r, body):
            return OutEmpty(rn(x), rs, r, rename_free(body, old, new))
        case InEmpty(x, rs, r):
            return InEmpty(rn(x), rs, r)
        case SelL(x, rs, r, body):
            return SelL(rn(x), rs, r, rename_free(body, old, new))
        case SelR(x, rs, r, body):
            return SelR(rn(x), rs, r, rename_free(body, old, new))
        case Case(x, rs, r, left, right):
            return Case(rn(x), rs, r, rename_free(left, old, new), rename_free(right, old, new))
        case MsgSkipIn(x, rs, r, s, body) | MsgSkipOut(x, rs, r, s, body) | MsgRecv(
            x, rs, r, s, body
        ) | MsgSend(x, rs, r, s, body):
            return type(p)(rn(x), rs, r, s, rename_free(body, old, new))
    raise TypeError(p)


def strip_cut_annotations(p: Process) -> Process:
    """Drop the cut type annotations (reduction never reads them)."""
    match p:
        case Cut(x, _, parts):
            return Cut(x, None, tuple(strip_cut_annotations(q) for q in parts))
        case InName(x, rs, y, r, left, right):
            return InName(x, rs, y, r, strip_cut_annotations(left), strip_cut_annotations(right))
        case Case(x, rs, r, left, right):
            return Case(x, rs, r, strip_cut_annotations(left), strip_cut_annotations(right))
        case InEmpty():
            return p
        case OutName(x, rs, y, r, body) | ServerAccept(x, rs, y, r, body) | ClientRequest(
            x, rs, y, r, body
        ):
            return type(p)(x, rs, y, r, strip_cut_annotations(body))
        case OutEmpty(x, rs, r, body) | SelL(x, rs, r, body) | SelR(x, rs, r, body):
            return type(p)(x, rs, r, strip_cut_annotations(body))
        case MsgSkipIn(x, rs, r, s, body) | MsgSkipOut(x, rs, r, s, body) | MsgRecv(
            x, rs, r, s, body
        ) | MsgSend(x, rs, r, s, body):
            return type(p)(x, rs, r, s, strip_cut_annotations(body))
    raise TypeError(p)


# ---------------------------------------------------------------------------
# alpha/permutation-canonical forms and structural equivalence


def _canon(p: Process, env: dict, depth: int):
    def nm(n):
        return env.get(n, ("f", n))

    match p:
        case Cut(x, ann, parts):
            e2 = dict(env)
            e2[x] = ("b", depth)
            keys = sorted(_canon(q, e2, depth + 1) for q in parts)
            return ("cut", formula_key(ann) if ann is not None else None, tuple(keys))
        case OutName(x, rs, y, r, body):
            e2 = dict(env)
            e2[y] = ("b", depth)
            return ("out", nm(x), str(rs), r, _canon(body, e2, depth + 1))
        case InName(x, rs, y, r, left, right):
            e2 = dict(env)
            e2[y] = ("b", depth)
            return (
                "in",
                nm(x),
                str(rs),
                r,
                _canon(left, e2, depth + 1),
                _canon(right, env, depth + 1),
            )
        case OutEmpty(x, rs, r, body):
            return ("oute", nm(x), str(rs), r, _canon(body, env, depth + 1))
        case InEmpty(x, rs, r):
            return ("ine", nm(x), str(rs), r)
        case SelL(x, rs, r, body):
            return ("sell", nm(x), str(rs), r, _canon(body, env, depth + 1))
        case SelR(x, rs, r, body):
            return ("selr", nm(x), str(rs), r, _canon(body, env, depth + 1))
        case Case(x, rs, r, left, right):
            return (
                "case",
                nm(x),
                str(rs),
                r,
                _canon(left, env, depth + 1),
                _canon(right, env, depth + 1),
            )
        case ServerAccept(x, rs, y, r, body):
            e2 = dict(env)
            e2[y] = ("b", depth)
            return ("srv", nm(x), str(rs), r, _canon(body, e2, depth + 1))
        case ClientRequest(x, rs, y, r, body):
            e2 = dict(env)
            e2[y] = ("b", depth)
            return ("req", nm(x), str(rs), r, _canon(body, e2, depth + 1))
        case MsgSkipIn(x, rs, r, s, body):
            return ("mski", nm(x), str(rs), r, s, _canon(body, env, depth + 1))
        case MsgSkipOut(x, rs, r, s, body):
            return ("msko", nm(x), str(rs), r, s, _canon(body, env, depth + 1))
        case MsgRecv(x, rs, r, s, body):
            return ("mrecv", nm(x), str(rs), r, s, _canon(body, env, depth + 1))
        case MsgSend(x, rs, r, s, body):
            return ("msend", nm(x), str(rs), r, s, _canon(body, env, depth + 1))
    raise TypeError(p)


def canonical_key(p: Process):
    """Alpha- and part-permutation-invariant structural key."""
    return _canon(p, {}, 0)


def alpha_equiv(p: Process, q: Process) -> bool:
    return canonical_key(p) == canonical_key(q)


def _children(p: Process) -> list[Process]:
    match p:
        case Cut(_, _, parts):
            return list(parts)
        case InName(_, _, _, _, left, right) | Case(_, _, _, left, right):
            return [left, right]
        case InEmpty():
            return []
        case _:
            return [p.body]


def _rebuild(p: Process, children: list[Process]) -> Process:
    match p:
        case Cut(x, ann, _):
            return Cut(x, ann, tuple(children))
        case InName(x, rs, y, r, _, _):
            return InName(x, rs, y, r, children[0], children[1])
        case Case(x, rs, r, _, _):
            return Case(x, rs, r, children[0], children[1])
        case InEmpty():
            return p
        case _:
            return replace(p, body=children[0])


def _assoc_moves(p: Process):
    """All single applications of the cut-exchange equivalence, anywhere."""
    match p:
        case Cut(x, annx, parts):
            for k, part in enumerate(parts):
                if isinstance(part, Cut) and part.x != x:
                    y, anny, inner = part.x, part.ann, part.parts
                    rest = parts[:k] + parts[k + 1 :]
                    if y in frozenset().union(*(free_names(q) for q in rest)) if rest else False:
                        continue
                    for m, pivot in enumerate(inner):
                        others = inner[:m] + inner[m + 1 :]
                        fp = free_names(pivot)
                        if x not in fp or y not in fp:
                            continue
                        if others and any(x in free_names(q) for q in others):
                            continue
                        yield Cut(y, anny, (Cut(x, annx, (pivot,) + rest),) + others)
    kids = _children(p)
    for k, child in enumerate(kids):
        for moved in _assoc_moves(child):
            yield _rebuild(p, kids[:k] + [moved] + kids[k + 1 :])


def struct_equiv(p: Process, q: Process, limit: int = 4000) -> bool:
    """Least congruence from alpha, part permutation and cut exchange."""
    target = canonical_key(q)
    start = canonical_key(p)
    if start == target:
        return True
    seen = {start}
    frontier = [p]
    while frontier and len(seen) < limit:
        nxt = []
        for t in frontier:
            for t2 in _assoc_moves(t):
                key = canonical_key(t2)
                if key == target:
                    return True
                if key not in seen:
                    seen.add(key)
                    nxt.append(t2)
        frontier = nxt
    return False


# ---------------------------------------------------------------------------
# typing


class ProcessTypeError(Exception):
    def __init__(self, reason: str, path: tuple = ()):
        self.reason = reason
        self.path = path
        super().__init__(f"{reason} (at {list(path)})" if path else reason)


@dataclass(frozen=True)
class TypingDerivation:
    rule: str
    process: Process
    env: tuple[tuple[str, IFormula], ...]
    premises: tuple["TypingDerivation", ...] = ()
    subject: str | None = None
    object_: str | None = None
    rolesets: tuple[RoleSet, ...] | None = None


TypeEnv = dict[str, IFormula]


def _env_lookup(env, name):
    for z, f in env:
        if z == name:
            return f
    return None


def _env_without(env, name):
    return tuple((z, f) for z, f in env if z != name)


def _is_query_assoc(f: IFormula) -> bool:
    return isinstance(f.body, Bang) and f.body.r not in f.roles


def _find_base(env, p: Process) -> RoleBase | None:
    for _, f in env:
        return f.roles.base
    stack = [p]
    while stack:
        q = stack.pop()
        rs = getattr(q, "rs", None)
        if rs is not None:
            return rs.base
        stack.extend(_children(q))
    return None


def typecheck(p: Process, env: TypeEnv | None = None) -> TypingDerivation:
    """Check ``p`` against the environment, building the typing derivation."""
    items = tuple((env or {}).items())
    names = [z for z, _ in items]
    if len(set(names)) != len(names):
        raise ProcessTypeError("environment names are not distinct")
    for z, f in items:
        if not is_proc_type(f.body):
            raise ProcessTypeError(f"{z} is not associated with a session type: {f.body}")
    base = _find_base(items, p)
    if base is None:
        raise ProcessTypeError("no role base is inferable from the judgment")
    return _tc(p, items, base, ())


def _first_roles(p: Process, x: str) -> RoleSet | None:
    """Role-set annotation on the first free header over ``x``."""
    match p:
        case Cut(y, _, parts):
            if y == x:
                return None
            for q in parts:
                rs = _first_roles(q, x)
                if rs is not None:
                    return rs
            return None
        case InEmpty(z, rs, _):
            return rs if z == x else None
        case OutName(z, rs, y, _, body) | ServerAccept(z, rs, y, _, body) | ClientRequest(
            z, rs, y, _, body
        ):
            if z == x:
                return rs
            return None if y == x else _first_roles(body, x)
        case InName(z, rs, y, _, left, right):
            if z == x:
                return rs
            got = None if y == x else _first_roles(left, x)
            return got if got is not None else _first_roles(right, x)
        case Case(z, rs, _, left, right):
            if z == x:
                return rs
            got = _first_roles(left, x)
            return got if got is not None else _first_roles(right, x)
        case OutEmpty(z, rs, _, body) | SelL(z, rs, _, body) | SelR(z, rs, _, body):
            return rs if z == x else _first_roles(body, x)
        case MsgSkipIn(z, rs, _, _, body) | MsgSkipOut(z, rs, _, _, body) | MsgRecv(
            z, rs, _, _, body
        ) | MsgSend(z, rs, _, _, body):
            return rs if z == x else _first_roles(body, x)
    raise TypeError(p)


def _tc(p: Process, env, base: RoleBase, path) -> TypingDerivation:
    fn = free_names(p)

    # discharge unused associations immediately (only ?-shaped ones may go)
    for z, f in env:
        if z not in fn:
            if not _is_query_assoc(f):
                raise ProcessTypeError(
                    f"unused association {z} : [{f.roles}]{_fmt(f.body)} is not weakenable", path
                )
            sub = _tc(p, _env_without(env, z), base, path)
            return TypingDerivation("bang-neg-weaken", p, env, (sub,), subject=z)

    missing = fn - {z for z, _ in env}
    if missing:
        raise ProcessTypeError(f"free names not in the environment: {sorted(missing)}", path)

    match p:
        case InEmpty(x, rs, r):
            f = _env_lookup(env, x)
            _expect_type(f, x, rs, One(r), path)
            if r not in rs:
                raise ProcessTypeError(f"empty input on {x} needs role {r} in {rs}", path)
            if len(env) != 1:
                raise ProcessTypeError("terminated input must own the whole environment", path)
            return TypingDerivation("one-pos", p, env, (), subject=x)

        case OutEmpty(x, rs, r, body):
            f = _env_lookup(env, x)
            _expect_type(f, x, rs, One(r), path)
            if r in rs:
                raise ProcessTypeError(f"empty output on {x} needs role {r} outside {rs}", path)
            sub = _tc(body, _env_without(env, x), base, path + (0,))
            return TypingDerivation("one-neg", p, env, (sub,), subject=x)

        case OutName(x, rs, y, r, body):
            f = _env_lookup(env, x)
            a = _expect_shape(f, x, rs, Tensor, r, path)
            if r in rs:
                raise ProcessTypeError(f"name output on {x} needs role {r} outside {rs}", path)
            y, body = _avoid(y, body, env)
            prem_env = _env_without(env, x) + ((y, IFormula(rs, a.left)), (x, IFormula(rs, a.right)))
            sub = _tc(body, prem_env, base, path + (0,))
            return TypingDerivation("tensor-neg", p, env, (sub,), subject=x, object_=y)

        case InName(x, rs, y, r, left, right):
            f = _env_lookup(env, x)
            a = _expect_shape(f, x, rs, Tensor, r, path)
            if r not in rs:
                raise ProcessTypeError(f"name input on {x} needs role {r} in {rs}", path)
            y2, left2 = _avoid(y, left, env)
            if y2 != y:
                p = InName(x, rs, y2, r, left2, right)
            y, left = y2, left2
            rest = _env_without(env, x)
            shared = [z for z, g in rest if z in free_names(left) and z in free_names(right)]
            if shared:
                return _contract_step(p, env, shared[0], base, path)
            env_l = tuple((z, g) for z, g in rest if z in free_names(left))
            env_r = tuple((z, g) for z, g in rest if (z, g) not in env_l)
            sub_l = _tc(left, env_l + ((y, IFormula(rs, a.left)),), base, path + (0,))
            sub_r = _tc(right, env_r + ((x, IFormula(rs, a.right)),), base, path + (1,))
            return TypingDerivation("tensor-pos", p, env, (sub_l, sub_r), subject=x, object_=y)

        case SelL(x, rs, r, body) | SelR(x, rs, r, body):
            f = _env_lookup(env, x)
            a = _expect_shape(f, x, rs, With, r, path)
            if r in rs:
                raise ProcessTypeError(f"selection on {x} needs role {r} outside {rs}", path)
            pick = a.left if isinstance(p, SelL) else a.right
            sub = _tc(body, _env_without(env, x) + ((x, IFormula(rs, pick)),), base, path + (0,))
            rule = "with-neg-l" if isinstance(p, SelL) else "with-neg-r"
            return TypingDerivation(rule, p, env, (sub,), subject=x)

        case Case(x, rs, r, left, right):
            f = _env_lookup(env, x)
            a = _expect_shape(f, x, rs, With, r, path)
            if r not in rs:
                raise ProcessTypeError(f"case offer on {x} needs role {r} in {rs}", path)
            rest = _env_without(env, x)
            sub_l = _tc(left, rest + ((x, IFormula(rs, a.left)),), base, path + (0,))
            sub_r = _tc(right, rest + ((x, IFormula(rs, a.right)),), base, path + (1,))
            return TypingDerivation("with-pos", p, env, (sub_l, sub_r), subject=x)

        case ServerAccept(x, rs, y, r, body):
            f = _env_lookup(env, x)
            a = _expect_shape(f, x, rs, Bang, r, path)
            if r not in rs:
                raise ProcessTypeError(f"server accept on {x} needs role {r} in {rs}", path)
            for z, g in env:
                if z != x and not _is_query_assoc(g):
                    raise ProcessTypeError(
                        f"server context must be ?-shaped, but {z} : [{g.roles}]{_fmt(g.body)}",
                        path,
                    )
            y, body = _avoid(y, body, env)
            sub = _tc(body, _env_without(env, x) + ((y, IFormula(rs, a.body)),), base, path + (0,))
            return TypingDerivation("bang-pos", p, env, (sub,), subject=x, object_=y)

        case ClientRequest(x, rs, y, r, body):
            f = _env_lookup(env, x)
            a = _expect_shape(f, x, rs, Bang, r, path)
            if r in rs:
                raise ProcessTypeError(f"client request on {x} needs role {r} outside {rs}", path)
            y, body = _avoid(y, body, env)
            if x in free_names(body):
                x2 = fresh_name(x)
                p2 = ClientRequest(x2, rs, y, r, body)
                sub = _tc(p2, env + ((x2, f),), base, path)
                return TypingDerivation(
                    "bang-neg-contract", p, env, (sub,), subject=x, object_=x2
                )
            sub = _tc(body, _env_without(env, x) + ((y, IFormula(rs, a.body)),), base, path + (0,))
            return TypingDerivation("bang-neg-derelict", p, env, (sub,), subject=x, object_=y)

        case MsgSkipIn(x, rs, r, s, body) | MsgSkipOut(x, rs, r, s, body) | MsgRecv(
            x, rs, r, s, body
        ) | MsgSend(x, rs, r, s, body):
            f = _env_lookup(env, x)
            a = _expect_msg(f, x, rs, r, s, path)
            want = {
                MsgSkipIn: (True, True, "msg-pos-pos"),
                MsgSkipOut: (False, False, "msg-neg-neg"),
                MsgRecv: (True, False, "msg-pos-neg"),
                MsgSend: (False, True, "msg-neg-pos"),
            }[type(p)]
            if (r in rs, s in rs) != want[:2]:
                raise ProcessTypeError(
                    f"transfer header on {x} disagrees with roles {r},{s} against {rs}", path
                )
            sub = _tc(body, _env_without(env, x) + ((x, IFormula(rs, a.body)),), base, path + (0,))
            return TypingDerivation(want[2], p, env, (sub,), subject=x)

        case Cut(x, ann, parts):
            if ann is None:
                raise ProcessTypeError("cut without a type annotation", path)
            if not is_proc_type(ann):
                raise ProcessTypeError(f"cut annotation is not a session type: {_fmt(ann)}", path)
            if _env_lookup(env, x) is not None:
                x2 = fresh_name(x)
                parts = tuple(rename_free(q, x, x2) for q in parts)
                p = Cut(x2, ann, parts)
                x = x2
            shared = []
            for z, g in env:
                holders = [k for k, q in enumerate(parts) if z in free_names(q)]
                if len(holders) > 1:
                    shared.append((z, g, holders))
            if shared:
                z, g, holders = shared[0]
                if not _is_query_assoc(g):
                    raise ProcessTypeError(
                        f"{z} is shared by several parts but is not ?-shaped", path
                    )
                z2 = fresh_name(z)
                parts2 = list(parts)
                parts2[holders[1]] = rename_free(parts2[holders[1]], z, z2)
                sub = _tc(Cut(x, ann, tuple(parts2)), env + ((z2, g),), base, path)
                return TypingDerivation(
                    "bang-neg-contract", p, env, (sub,), subject=z, object_=z2
                )
            part_rs: list[RoleSet | None] = [_first_roles(q, x) for q in parts]
            missing = [k for k, rs in enumerate(part_rs) if rs is None]
            if len(missing) > 1:
                raise ProcessTypeError(
                    f"several parts never mention the linked name {x}", path
                )
            if missing:
                comps = [rl.complement(rs) for rs in part_rs if rs is not None]
                used = rl.disjoint_union(comps) if comps else rl.empty_set(base)
                if used is None:
                    raise ProcessTypeError("link role-set complements overlap", path)
                part_rs[missing[0]] = used
            rsets = [rs for rs in part_rs]
            if not rl.is_partition_of_full([rl.complement(rs) for rs in rsets]):
                raise ProcessTypeError(
                    "link role-set complements do not partition the base", path
                )
            subs = []
            for k, q in enumerate(parts):
                env_k = tuple((z, g) for z, g in env if z in free_names(q))
                sub = _tc(q, env_k + ((x, IFormula(rsets[k], ann)),), base, path + (k,))
                subs.append(sub)
            return TypingDerivation(
                "n-cut", p, env, tuple(subs), subject=x, rolesets=tuple(rsets)
            )

    raise TypeError(p)


def _contract_step(p, env, z, base, path):
    g = _env_lookup(env, z)
    if not _is_query_assoc(g):
        raise ProcessTypeError(f"{z} is used in both branches but is not ?-shaped", path)
    z2 = fresh_name(z)
    assert isinstance(p, InName)
    p2 = InName(p.x, p.rs, p.y, p.r, rename_free(p.left, z, z2), p.right)
    sub = _tc(p2, env + ((z2, g),), base, path)
    return TypingDerivation("bang-neg-contract", p, env, (sub,), subject=z, object_=z2)


def _avoid(y: str, body: Process, env) -> tuple[str, Process]:
    if any(z == y for z, _ in env):
        y2 = fresh_name(y)
        return y2, rename_free(body, y, y2)
    return y, body


def _fmt(a: Formula) -> str:
    from .printer import format_formula

    return format_formula(a)


def _expect_type(f, x, rs, want, path):
    if f is None:
        raise ProcessTypeError(f"no association for {x}", path)
    if f.roles != rs:
        raise ProcessTypeError(f"header roles {rs} on {x} disagree with [{f.roles}]", path)
    if formula_key(f.body) != formula_key(want):
        raise ProcessTypeError(f"{x} has type {_fmt(f.body)}, wanted {_fmt(want)}", path)


def _expect_shape(f, x, rs, shape, r, path):
    if f is None:
        raise ProcessTypeError(f"no association for {x}", path)
    if f.roles != rs:
        raise ProcessTypeError(f"header roles {rs} on {x} disagree with [{f.roles}]", path)
    if not isinstance(f.body, shape) or f.body.r != r:
        raise ProcessTypeError(
            f"{x} has type {_fmt(f.body)}, which does not match the header", path
        )
    return f.body


def _expect_msg(f, x, rs, r, s, path):
    if f is None:
        raise ProcessTypeError(f"no association for {x}", path)
    if f.roles != rs:
        raise ProcessTypeError(f"header roles {rs} on {x} disagree with [{f.roles}]", path)
    if not isinstance(f.body, Msg) or (f.body.r, f.body.s) != (r, s):
        raise ProcessTypeError(
            f"{x} has type {_fmt(f.body)}, which does not match the transfer header", path
        )
    return f.body


# ---------------------------------------------------------------------------
# erasing a typing derivation to the logic kernel


class EraseError(Exception):
    pass


def _find_value(seq: Sequent, value: IFormula, used: set[int]) -> int:
    k = value.key()
    for pos, f in enumerate(seq):
        if pos not in used and f.key() == k:
            used.add(pos)
            return pos
    raise EraseError(f"erased conclusion lost [{value.roles}]{_fmt(value.body)}")


def erase_to_sequent(td: TypingDerivation) -> Derivation:
    """Strip the process content, leaving a kernel derivation that checks."""
    from .cutelim import CutSpec, cutn

    def assoc(env, name) -> IFormula:
        f = _env_lookup(env, name)
        assert f is not None
        return f

    def go(td: TypingDerivation) -> Derivation:
        subs = [go(s) for s in td.premises]
        env = td.env
        match td.rule:
            case "one-pos":
                f = assoc(env, td.subject)
                return DOnePos(f.roles, f.body.r)
            case "one-neg":
                f = assoc(env, td.subject)
                return DOneNeg(f.roles, f.body.r, subs[0])
            case "tensor-neg":
                f = assoc(env, td.subject)
                prem_env = td.premises[0].env
                used: set[int] = set()
                pa = _find_value(subs[0].concl, assoc(prem_env, td.object_), used)
                pb = _find_value(subs[0].concl, assoc(prem_env, td.subject), used)
                return DTensorNeg(f.body.r, subs[0], pa, pb)
            case "tensor-pos":
                f = assoc(env, td.subject)
                pa = _find_value(subs[0].concl, assoc(td.premises[0].env, td.object_), set())
                pb = _find_value(subs[1].concl, assoc(td.premises[1].env, td.subject), set())
                return DTensorPos(f.body.r, subs[0], pa, subs[1], pb)
            case "with-neg-l":
                f = assoc(env, td.subject)
                pa = _find_value(subs[0].concl, assoc(td.premises[0].env, td.subject), set())
                return DWithNegL(f.body.r, f.body.right, subs[0], pa)
            case "with-neg-r":
                f = assoc(env, td.subject)
                pb = _find_value(subs[0].concl, assoc(td.premises[0].env, td.subject), set())
                return DWithNegR(f.body.r, f.body.left, subs[0], pb)
            case "with-pos":
                f = assoc(env, td.subject)
                pa = _find_value(subs[0].concl, assoc(td.premises[0].env, td.subject), set())
                pb = _find_value(subs[1].concl, assoc(td.premises[1].env, td.subject), set())
                return DWithPos(f.body.r, subs[0], pa, subs[1], pb)
            case "bang-pos":
                f = assoc(env, td.subject)
                pa = _find_value(subs[0].concl, assoc(td.premises[0].env, td.object_), set())
                return DBangPos(f.body.r, subs[0], pa)
            case "bang-neg-weaken":
                f = assoc(env, td.subject)
                return DBangNegWeaken(f.body.r, f.roles, f.body.body, subs[0])
            case "bang-neg-derelict":
                f = assoc(env, td.subject)
                pa = _find_value(subs[0].concl, assoc(td.premises[0].env, td.object_), set())
                return DBangNegDerelict(f.body.r, subs[0], pa)
            case "bang-neg-contract":
                f = assoc(env, td.subject)
                prem_env = td.premises[0].env
                used = set()
                pa = _find_value(subs[0].concl, assoc(prem_env, td.object_), used)
                pb = _find_value(subs[0].concl, assoc(prem_env, td.subject), used)
                return DBangNegContract(subs[0], pa, pb)
            case "n-cut":
                ann = td.process.ann
                spec = []
                for k, e in enumerate(subs):
                    want = IFormula(td.rolesets[k], ann)
                    pos = _find_value(e.concl, want, set())
                    spec.append((e, (pos,)))
                return cutn(CutSpec(spec))
            case rule if rule.startswith("msg-"):
                raise EraseError("transfer headers have no logic-kernel counterpart")
        raise EraseError(f"unknown typing rule {td.rule}")

    return go(td)


def td_uses_msg(td: TypingDerivation) -> bool:
    if td.rule.startswith("msg-"):
        return True
    return any(td_uses_msg(s) for s in td.premises)


def env_sequent(env: TypeEnv | tuple) -> Sequent:
    items = tuple(env.items()) if isinstance(env, dict) else tuple(env)
    return Sequent(tuple(f for _, f in items))


# ---------------------------------------------------------------------------
# reduction


@dataclass(frozen=True)
class StepResult:
    process: Process
    rule: str
    alt: Process | None = None  # the other ordering at a tensor principal step


def step(p: Process) -> Process | None:
    r = step_detailed(p)
    return r.process if r is not None else None


def step_detailed(p: Process) -> StepResult | None:
    """One deterministic reduction step; None on normal forms."""
    if isinstance(p, Cut):
        r = _reduce_cut(p)
        if r is not None:
            return r
    for k, child in enumerate(_children(p)):
        r = step_detailed(child)
        if r is not None:
            kids = _children(p)
            wrapped = _rebuild(p, kids[:k] + [r.process] + kids[k + 1 :])
            alt = (
                _rebuild(p, kids[:k] + [r.alt] + kids[k + 1 :]) if r.alt is not None else None
            )
            return StepResult(wrapped, r.rule, alt)
    return None


def _subject(p: Process) -> str | None:
    return None if isinstance(p, Cut) else p.x


def _ann_parts(ann: Formula | None, shape) -> tuple:
    if isinstance(ann, shape):
        if shape is Tensor or shape is With:
            return ann.left, ann.right
        return (ann.body,)
    return (None, None) if shape in (Tensor, With) else (None,)


def _reduce_cut(cut: Cut) -> StepResult | None:
    x, ann, parts = cut.x, cut.ann, cut.parts
    on_x = [q for q in parts if _subject(q) == x]

    if len(on_x) == len(parts):
        r = _principal(cut)
        if r is not None:
            return r

    servers = [q for q in parts if isinstance(q, ServerAccept) and q.x == x]
    if len(servers) == len(parts) - 1:
        (exc,) = [q for q in parts if not (isinstance(q, ServerAccept) and q.x == x)]
        if x not in free_names(exc):
            return StepResult(exc, "bang-gc")
        if isinstance(exc, ClientRequest) and exc.x == x:
            body_ann = _ann_parts(ann, Bang)[0]
            if x not in free_names(exc.body):
                y2 = fresh_name(exc.y)
                new_parts = [rename_free(exc.body, exc.y, y2)] + [
                    rename_free(s.body, s.y, y2) for s in servers
                ]
                return StepResult(Cut(y2, body_ann, tuple(new_parts)), "bang-spawn")
            x2 = fresh_name(x)
            head = ClientRequest(x2, exc.rs, exc.y, exc.r, exc.body)
            copies = [rename_free(s, x, x2) for s in servers]
            inner = Cut(x2, ann, (head,) + tuple(copies))
            return StepResult(Cut(x, ann, (inner,) + tuple(servers)), "bang-replicate")

    # commuting conversions: push the cut under an unrelated header
    for k, q in enumerate(parts):
        subj = _subject(q)
        if subj is None or subj == x:
            continue
        rest = parts[:k] + parts[k + 1 :]
        conv = _convert(cut, q, rest)
        if conv is not None:
            return conv
    return None


def _principal(cut: Cut) -> StepResult | None:
    x, ann, parts = cut.x, cut.ann, cut.parts

    outs = [q for q in parts if isinstance(q, OutEmpty)]
    ins = [q for q in parts if isinstance(q, InEmpty)]
    if len(outs) == 1 and len(ins) == len(parts) - 1:
        return StepResult(outs[0].body, "one")

    nouts = [q for q in parts if isinstance(q, OutName)]
    nins = [q for q in parts if isinstance(q, InName)]
    if len(nouts) == 1 and len(nins) == len(parts) - 1:
        out = nouts[0]
        a1, a2 = _ann_parts(ann, Tensor)
        y2 = fresh_name(out.y)
        p10 = rename_free(out.body, out.y, y2)
        lefts = [rename_free(q.left, q.y, y2) for q in nins]
        rights = [q.right for q in nins]
        q1 = Cut(x, a2, (Cut(y2, a1, (p10,) + tuple(lefts)),) + tuple(rights))
        q2 = Cut(y2, a1, (Cut(x, a2, (p10,) + tuple(rights)),) + tuple(lefts))
        return StepResult(q1, "tensor", alt=q2)

    sels = [q for q in parts if isinstance(q, (SelL, SelR))]
    cases = [q for q in parts if isinstance(q, Case)]
    if len(sels) == 1 and len(cases) == len(parts) - 1:
        sel = sels[0]
        a1, a2 = _ann_parts(ann, With)
        left = isinstance(sel, SelL)
        branches = [q.left if left else q.right for q in cases]
        return StepResult(
            Cut(x, a1 if left else a2, (sel.body,) + tuple(branches)),
            "with-l" if left else "with-r",
        )

    skips_in = [q for q in parts if isinstance(q, MsgSkipIn)]
    skips_out = [q for q in parts if isinstance(q, MsgSkipOut)]
    sends = [q for q in parts if isinstance(q, MsgSend)]
    recvs = [q for q in parts if isinstance(q, MsgRecv)]
    body_ann = _ann_parts(ann, Msg)[0]
    if len(skips_out) == 1 and len(skips_in) == len(parts) - 1:
        bodies = tuple(q.body for q in parts)
        return StepResult(Cut(x, body_ann, bodies), "msg-skip")
    if len(sends) == 1 and len(recvs) == 1 and len(skips_in) == len(parts) - 2:
        bodies = tuple(q.body for q in parts)
        return StepResult(Cut(x, body_ann, bodies), "msg-transfer")

    # server bundles are handled by the caller (the exception part may be
    # anything); every other all-on-x mixture is stuck
    return None


def _convert(cut: Cut, q: Process, rest: tuple[Process, ...]) -> StepResult | None:
    x, ann = cut.x, cut.ann
    rest_fn = frozenset().union(*(free_names(t) for t in rest)) if rest else frozenset()

    def freshen(y, *bodies):
        if y in rest_fn or y == x:
            y2 = fresh_name(y)
            return y2, [rename_free(b, y, y2) for b in bodies]
        return y, list(bodies)

    match q:
        case OutName(z, rs, y, r, body):
            y, (body,) = freshen(y, body)
            return StepResult(
                OutName(z, rs, y, r, Cut(x, ann, (body,) + rest)), "commute-out"
            )
        case InName(z, rs, y, r, left, right):
            y, (left,) = freshen(y, left)
            if x in free_names(left):
                return StepResult(
                    InName(z, rs, y, r, Cut(x, ann, (left,) + rest), right), "commute-in-l"
                )
            if x in free_names(right):
                return StepResult(
                    InName(z, rs, y, r, left, Cut(x, ann, (right,) + rest)), "commute-in-r"
                )
            return None
        case SelL(z, rs, r, body):
            return StepResult(SelL(z, rs, r, Cut(x, ann, (body,) + rest)), "commute-sel")
        case SelR(z, rs, r, body):
            return StepResult(SelR(z, rs, r, Cut(x, ann, (body,) + rest)), "commute-sel")
        case Case(z, rs, r, left, right):
            return StepResult(
                Case(z, rs, r, Cut(x, ann, (left,) + rest), Cut(x, ann, (right,) + rest)),
                "commute-case",
            )
        case OutEmpty(z, rs, r, body):
            return StepResult(OutEmpty(z, rs, r, Cut(x, ann, (body,) + rest)), "commute-oute")
        case ServerAccept(z, rs, y, r, body):
            y, (body,) = freshen(y, body)
            return StepResult(
                ServerAccept(z, rs, y, r, Cut(x, ann, (body,) + rest)), "commute-srv"
            )
        case ClientRequest(z, rs, y, r, body):
            y, (body,) = freshen(y, body)
            return StepResult(
                ClientRequest(z, rs, y, r, Cut(x, ann, (body,) + rest)), "commute-req"
            )
        case MsgSkipIn(z, rs, r, s, body) | MsgSkipOut(z, rs, r, s, body) | MsgRecv(
            z, rs, r, s, body
        ) | MsgSend(z, rs, r, s, body):
            return StepResult(
                type(q)(z, rs, r, s, Cut(x, ann, (body,) + rest)), "commute-msg"
            )
        case InEmpty():
            return None
        case Cut():
            return None
    raise TypeError(q)


@dataclass(frozen=True)
class NormalizeResult:
    process: Process
    steps: int
    exhausted: bool
    trace: tuple[StepResult, ...] = ()


def normalize(p: Process, fuel: int, keep_trace: bool = False) -> NormalizeResult:
    """Iterate the reduction to a normal form or until fuel runs out."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    steps = 0
    trace: list[StepResult] = []
    while steps < fuel:
        r = step_detailed(p)
        if r is None:
            return NormalizeResult(p, steps, False, tuple(trace))
        if keep_trace:
            trace.append(r)
        p = r.process
        steps += 1
    return NormalizeResult(p, steps, True, tuple(trace))


def has_cut(p: Process) -> bool:
    if isinstance(p, Cut):
        return True
    return any(has_cut(q) for q in _children(p))


def is_principal_cut(p: Process, td: TypingDerivation) -> bool:
    """True iff every part's last typing rule introduces the linked name."""
    if not isinstance(p, Cut):
        raise ValueError("not a cut")
    while td.rule == "bang-neg-weaken":
        td = td.premises[0]
    if td.rule != "n-cut":
        return False
    header_rules = {
        "one-pos",
        "one-neg",
        "tensor-neg",
        "tensor-pos",
        "with-neg-l",
        "with-neg-r",
        "with-pos",
        "bang-pos",
        "bang-neg-derelict",
        "msg-pos-pos",
        "msg-neg-neg",
        "msg-pos-neg",
        "msg-neg-pos",
    }
    name = td.subject
    for sub in td.premises:
        if sub.rule not in header_rules or sub.subject != name:
            return False
    return True


@dataclass(frozen=True)
class SRReport:
    ok: bool
    steps: int
    normal_form: Process
    exhausted: bool
    cut_free: bool
    progress_ok: bool
    failure: str | None = None


def check_subject_reduction(p: Process, env: TypeEnv, fuel: int) -> SRReport:
    """Run the reduction, re-typechecking after every step."""
    typecheck(p, env)
    steps = 0
    progress_ok = True
    while steps < fuel:
        if isinstance(p, Cut):
            r = step_detailed(p)
            if r is None:
                progress_ok = False
                return SRReport(False, steps, p, False, False, False, "stuck cut")
        else:
            r = step_detailed(p)
        if r is None:
            return SRReport(True, steps, p, False, not has_cut(p), progress_ok)
        p = r.process
        steps += 1
        try:
            typecheck(p, env)
        except ProcessTypeError as e:
            return SRReport(
                False, steps, p, False, not has_cut(p), progress_ok,
                f"step {steps} broke typing: {e.reason}",
            )
    return SRReport(True, steps, p, True, not has_cut(p), progress_ok)
