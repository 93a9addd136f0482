"""Tokenizer and recursive-descent parsers for the toolkit's text forms.

Grammar summary (whitespace-insensitive, ``#`` comments to end of line):

  roleset   := "{" nat ("," nat)* "}" | "{}" | "~" roleset
  term      := ident | ident "(" term ("," term)* ")"
  formula   := infix
  infix     := prefix (("*[" nat "]" | "&[" nat "]") prefix)*     (left assoc)
  prefix    := ident ["(" terms ")"]            -- atom
             | "one[" nat "]"
             | "![" nat "]" prefix-or-paren
             | "msg[" nat "," nat "]" prefix-or-paren
             | "all[" nat "]" ident "." formula
             | "(" formula ")"
  iformula  := "[" roleset "]" formula
  sequent   := "|-" [iformula ("," iformula)*]
  derivation:= "(rule" name [":major" nat] [":witness" term | ":eigen" ident]
               ":concl" sequent derivation* ")"
  process   := "new" ident [":" formula] ".(" process ("|" process)* ")"
             | ident roleset hdr "@" roleref "." cont
  problem   := ("base" nat | "base omega") (sequent | derivation
             | ["env" assoc ("," assoc)*] "proc" process)

Header forms: ``[y]`` name output, ``(y)`` name input (continuation
``(P|Q)``), ``[]``/``()`` empty output/input (input continues ``end``),
``[inl]``/``[inr]``/``(case)`` selection and offer (offer continues
``(P,Q)``), ``!x(y)``/``?x[y]`` server accept and client request, and the
transfer headers ``[skip] (skip) [send] (recv)`` at a role pair ``{r,s}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import roles as rl
from .roles import RoleBase, RoleSet
from .syntax import (
    Atom,
    Bang,
    Forall,
    Formula,
    Fun,
    IFormula,
    One,
    Sequent,
    Tensor,
    Term,
    Var,
    With,
    formula_key,
    subst_formula,
)
from .derivation import (
    DBangNegContract,
    DBangNegDerelict,
    DBangNegWeaken,
    DBangPos,
    DForallNeg,
    DForallPos,
    DId,
    DOneNeg,
    DOnePos,
    DTensorNeg,
    DTensorPos,
    DWithNegL,
    DWithNegR,
    DWithPos,
    Derivation,
    MalformedDerivation,
)
from .processes import (
    Case,
    ClientRequest,
    Cut,
    InEmpty,
    InName,
    Msg,
    MsgRecv,
    MsgSend,
    MsgSkipIn,
    MsgSkipOut,
    OutEmpty,
    OutName,
    Process,
    SelL,
    SelR,
    ServerAccept,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {msg}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<turnstile>\|-)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$'-]*)
  | (?P<punct>[(){}\[\]~,:.*&!?@|;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'num' | 'ident' | 'punct' | 'turnstile' | 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"stray character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            out.append(Token(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


class Cursor:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.k = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.k + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.k]
        if t.kind != "eof":
            self.k += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("punct", "turnstile", "ident")

    def eat(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def eat_kind(self, kind: str, what: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {what}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def done(self) -> bool:
        return self.peek().kind == "eof"


def _num(c: Cursor) -> int:
    return int(c.eat_kind("num", "a number").text)


def _adjacent(prev: Token, nxt: Token) -> bool:
    """True when ``nxt`` follows ``prev`` with no separating whitespace."""
    return nxt.line == prev.line and nxt.col == prev.col + len(prev.text)


# ---------------------------------------------------------------------------
# role sets


def parse_roleset(c: Cursor, base: RoleBase) -> RoleSet:
    if c.at("~"):
        c.eat("~")
        inner = parse_roleset(c, base)
        return rl.complement(inner)
    c.eat("{")
    roles = []
    if not c.at("}"):
        roles.append(_num(c))
        while c.at(","):
            c.eat(",")
            roles.append(_num(c))
    tok = c.eat("}")
    try:
        return rl.roleset(base, roles)
    except ValueError as e:
        raise ParseError(str(e), tok.line, tok.col)


# ---------------------------------------------------------------------------
# terms and formulas


def parse_term(c: Cursor) -> Term:
    tok = c.eat_kind("ident", "a term")
    # argument lists attach by juxtaposition: "f(x)" applies, "f (x)" does not
    if c.at("(") and _adjacent(tok, c.peek()):
        c.eat("(")
        args = [parse_term(c)]
        while c.at(","):
            c.eat(",")
            args.append(parse_term(c))
        c.eat(")")
        return Fun(tok.text, tuple(args))
    return Var(tok.text)


def _role_index(c: Cursor, base: RoleBase) -> int:
    tok = c.peek()
    r = _num(c)
    if base.is_finite and r >= base.size:
        raise ParseError(f"role {r} out of the base", tok.line, tok.col)
    return r


def parse_formula(c: Cursor, base: RoleBase) -> Formula:
    left = _parse_prefix(c, base)
    while c.at("*") or c.at("&"):
        op = c.next().text
        c.eat("[")
        r = _role_index(c, base)
        c.eat("]")
        right = _parse_prefix(c, base)
        left = Tensor(r, left, right) if op == "*" else With(r, left, right)
    return left


def _parse_prefix(c: Cursor, base: RoleBase) -> Formula:
    t = c.peek()
    if c.at("("):
        c.eat("(")
        a = parse_formula(c, base)
        c.eat(")")
        return a
    if c.at("!"):
        c.eat("!")
        c.eat("[")
        r = _role_index(c, base)
        c.eat("]")
        return Bang(r, _parse_prefix(c, base))
    if t.kind == "ident" and t.text == "one":
        c.next()
        c.eat("[")
        r = _role_index(c, base)
        c.eat("]")
        return One(r)
    if t.kind == "ident" and t.text == "msg":
        c.next()
        c.eat("[")
        r = _role_index(c, base)
        c.eat(",")
        s = _role_index(c, base)
        c.eat("]")
        return Msg(r, s, _parse_prefix(c, base))
    if t.kind == "ident" and t.text == "all":
        c.next()
        c.eat("[")
        r = _role_index(c, base)
        c.eat("]")
        var = c.eat_kind("ident", "a bound variable").text
        c.eat(".")
        return Forall(r, var, parse_formula(c, base))
    if t.kind == "ident":
        tok = c.next()
        args: tuple[Term, ...] = ()
        if c.at("(") and _adjacent(tok, c.peek()):
            c.eat("(")
            lst = [parse_term(c)]
            while c.at(","):
                c.eat(",")
                lst.append(parse_term(c))
            c.eat(")")
            args = tuple(lst)
        return Atom(tok.text, args)
    raise ParseError(f"expected a formula, found {t.text!r}", t.line, t.col)


def parse_iformula(c: Cursor, base: RoleBase) -> IFormula:
    c.eat("[")
    rs = parse_roleset(c, base)
    c.eat("]")
    return IFormula(rs, parse_formula(c, base))


def parse_sequent(c: Cursor, base: RoleBase) -> Sequent:
    c.eat("|-")
    items = []
    if c.at("["):
        items.append(parse_iformula(c, base))
        while c.at(","):
            c.eat(",")
            items.append(parse_iformula(c, base))
    return Sequent(tuple(items))


# ---------------------------------------------------------------------------
# derivations


class DerivationFormError(Exception):
    """S-expression is readable but not a rule instance."""


def _find_item(seq: Sequent, value: IFormula, used: set[int], tok: Token) -> int:
    k = value.key()
    for pos, f in enumerate(seq):
        if pos not in used and f.key() == k:
            used.add(pos)
            return pos
    raise DerivationFormError(
        f"{tok.line}:{tok.col}: premise conclusion lacks the needed occurrence"
    )


def parse_derivation(c: Cursor, base: RoleBase) -> Derivation:
    tok = c.eat("(")
    c.eat("rule")
    name = c.eat_kind("ident", "a rule name").text
    major = None
    witness = None
    eigen = None
    while c.at(":"):
        c.eat(":")
        key = c.eat_kind("ident", "a keyword").text
        if key == "major":
            major = _num(c)
        elif key == "witness":
            witness = parse_term(c)
        elif key == "eigen":
            eigen = c.eat_kind("ident", "an eigenvariable").text
        elif key == "concl":
            stated = parse_sequent(c, base)
            break
        else:
            raise ParseError(f"unknown keyword :{key}", tok.line, tok.col)
    else:
        raise ParseError("derivation node lacks :concl", tok.line, tok.col)
    premises = []
    while c.at("("):
        premises.append(parse_derivation(c, base))
    c.eat(")")
    d = _build_node(name, stated, major, witness, eigen, premises, tok)
    try:
        computed = d.concl
    except MalformedDerivation as e:
        raise DerivationFormError(f"{tok.line}:{tok.col}: {e}")
    if computed != stated:
        raise DerivationFormError(
            f"{tok.line}:{tok.col}: stated conclusion is not a permutation of the rule's"
        )
    return d


def _need_major(stated: Sequent, major, tok) -> IFormula:
    if major is None or not (0 <= major < len(stated)):
        raise DerivationFormError(f"{tok.line}:{tok.col}: rule needs a valid :major index")
    return stated[major]


def _build_node(name, stated, major, witness, eigen, premises, tok) -> Derivation:
    def arity(n):
        if len(premises) != n:
            raise DerivationFormError(f"{tok.line}:{tok.col}: {name} takes {n} premise(s)")

    match name:
        case "id":
            arity(0)
            if not stated.items:
                raise DerivationFormError(f"{tok.line}:{tok.col}: empty identity")
            return DId(stated[0].body, tuple(f.roles for f in stated))
        case "one-pos":
            arity(0)
            if len(stated) != 1 or not isinstance(stated[0].body, One):
                raise DerivationFormError(f"{tok.line}:{tok.col}: one-pos concludes a single unit")
            return DOnePos(stated[0].roles, stated[0].body.r)
        case "one-neg":
            arity(1)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, One):
                raise DerivationFormError(f"{tok.line}:{tok.col}: major is not a unit")
            return DOneNeg(m.roles, m.body.r, premises[0])
        case "tensor-neg":
            arity(1)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, Tensor):
                raise DerivationFormError(f"{tok.line}:{tok.col}: major is not a tensor")
            used: set[int] = set()
            pa = _find_item(premises[0].concl, IFormula(m.roles, m.body.left), used, tok)
            pb = _find_item(premises[0].concl, IFormula(m.roles, m.body.right), used, tok)
            return DTensorNeg(m.body.r, premises[0], pa, pb)
        case "tensor-pos":
            arity(2)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, Tensor):
                raise DerivationFormError(f"{tok.line}:{tok.col}: major is not a tensor")
            pa = _find_item(premises[0].concl, IFormula(m.roles, m.body.left), set(), tok)
            pb = _find_item(premises[1].concl, IFormula(m.roles, m.body.right), set(), tok)
            return DTensorPos(m.body.r, premises[0], pa, premises[1], pb)
        case "with-neg-l":
            arity(1)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, With):
                raise DerivationFormError(f"{tok.line}:{tok.col}: major is not an offer type")
            pa = _find_item(premises[0].concl, IFormula(m.roles, m.body.left), set(), tok)
            return DWithNegL(m.body.r, m.body.right, premises[0], pa)
        case "with-neg-r":
            arity(1)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, With):
                raise DerivationFormError(f"{tok.line}:{tok.col}: major is not an offer type")
            pb = _find_item(premises[0].concl, IFormula(m.roles, m.body.right), set(), tok)
            return DWithNegR(m.body.r, m.body.left, premises[0], pb)
        case "with-pos":
            arity(2)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, With):
                raise DerivationFormError(f"{tok.line}:{tok.col}: major is not an offer type")
            pa = _find_item(premises[0].concl, IFormula(m.roles, m.body.left), set(), tok)
            pb = _find_item(premises[1].concl, IFormula(m.roles, m.body.right), set(), tok)
            return DWithPos(m.body.r, premises[0], pa, premises[1], pb)
        case "bang-pos":
            arity(1)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, Bang):
                raise DerivationFormError(f"{tok.line}:{tok.col}: major is not banged")
            pa = _find_item(premises[0].concl, IFormula(m.roles, m.body.body), set(), tok)
            return DBangPos(m.body.r, premises[0], pa)
        case "bang-neg-weaken":
            arity(1)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, Bang):
                raise DerivationFormError(f"{tok.line}:{tok.col}: major is not banged")
            return DBangNegWeaken(m.body.r, m.roles, m.body.body, premises[0])
        case "bang-neg-derelict":
            arity(1)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, Bang):
                raise DerivationFormError(f"{tok.line}:{tok.col}: major is not banged")
            pa = _find_item(premises[0].concl, IFormula(m.roles, m.body.body), set(), tok)
            return DBangNegDerelict(m.body.r, premises[0], pa)
        case "bang-neg-contract":
            arity(1)
            m = _need_major(stated, major, tok)
            used = set()
            pa = _find_item(premises[0].concl, m, used, tok)
            pb = _find_item(premises[0].concl, m, used, tok)
            return DBangNegContract(premises[0], pa, pb)
        case "forall-neg":
            arity(1)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, Forall) or witness is None:
                raise DerivationFormError(
                    f"{tok.line}:{tok.col}: needs a quantified major and :witness"
                )
            inst = subst_formula(m.body.body, m.body.var, witness)
            pa = _find_item(premises[0].concl, IFormula(m.roles, inst), set(), tok)
            return DForallNeg(m.body.r, m.body.var, m.body.body, witness, premises[0], pa)
        case "forall-pos":
            arity(1)
            m = _need_major(stated, major, tok)
            if not isinstance(m.body, Forall) or eigen is None:
                raise DerivationFormError(
                    f"{tok.line}:{tok.col}: needs a quantified major and :eigen"
                )
            inst = subst_formula(m.body.body, m.body.var, Var(eigen))
            pa = _find_item(premises[0].concl, IFormula(m.roles, inst), set(), tok)
            return DForallPos(m.body.r, eigen, premises[0], pa)
    raise DerivationFormError(f"{tok.line}:{tok.col}: unknown rule {name!r}")


# ---------------------------------------------------------------------------
# processes


def parse_process(c: Cursor, base: RoleBase) -> Process:
    t = c.peek()
    if t.kind == "ident" and t.text == "new":
        c.next()
        x = c.eat_kind("ident", "a channel name").text
        ann = None
        if c.at(":"):
            c.eat(":")
            ann = parse_formula(c, base)
        c.eat(".")
        c.eat("(")
        parts = [parse_process(c, base)]
        while c.at("|"):
            c.eat("|")
            parts.append(parse_process(c, base))
        c.eat(")")
        return Cut(x, ann, tuple(parts))

    bang = client = False
    if c.at("!"):
        c.eat("!")
        bang = True
    elif c.at("?"):
        c.eat("?")
        client = True
    x = c.eat_kind("ident", "a channel name").text
    rs = parse_roleset(c, base)

    if bang or client:
        open_, close = ("(", ")") if bang else ("[", "]")
        c.eat(open_)
        y = c.eat_kind("ident", "a bound name").text
        c.eat(close)
        r = _eat_role(c, base)
        c.eat(".")
        body = parse_process(c, base)
        return (ServerAccept if bang else ClientRequest)(x, rs, y, r, body)

    if c.at("["):
        c.eat("[")
        if c.at("]"):
            c.eat("]")
            r = _eat_role(c, base)
            c.eat(".")
            return OutEmpty(x, rs, r, parse_process(c, base))
        t2 = c.peek()
        if t2.kind == "ident" and t2.text in ("inl", "inr", "skip", "send"):
            word = c.next().text
            c.eat("]")
            if word in ("inl", "inr"):
                r = _eat_role(c, base)
                c.eat(".")
                body = parse_process(c, base)
                return (SelL if word == "inl" else SelR)(x, rs, r, body)
            r, s = _eat_role_pair(c, base)
            c.eat(".")
            body = parse_process(c, base)
            return (MsgSkipOut if word == "skip" else MsgSend)(x, rs, r, s, body)
        y = c.eat_kind("ident", "a bound name").text
        c.eat("]")
        r = _eat_role(c, base)
        c.eat(".")
        return OutName(x, rs, y, r, parse_process(c, base))

    c.eat("(")
    if c.at(")"):
        c.eat(")")
        r = _eat_role(c, base)
        c.eat(".")
        end = c.eat_kind("ident", "'end'")
        if end.text != "end":
            raise ParseError("empty input continues with 'end'", end.line, end.col)
        return InEmpty(x, rs, r)
    t2 = c.peek()
    if t2.kind == "ident" and t2.text in ("case", "skip", "recv"):
        word = c.next().text
        c.eat(")")
        if word == "case":
            r = _eat_role(c, base)
            c.eat(".")
            c.eat("(")
            left = parse_process(c, base)
            c.eat(",")
            right = parse_process(c, base)
            c.eat(")")
            return Case(x, rs, r, left, right)
        r, s = _eat_role_pair(c, base)
        c.eat(".")
        body = parse_process(c, base)
        return (MsgSkipIn if word == "skip" else MsgRecv)(x, rs, r, s, body)
    y = c.eat_kind("ident", "a bound name").text
    c.eat(")")
    r = _eat_role(c, base)
    c.eat(".")
    c.eat("(")
    left = parse_process(c, base)
    c.eat("|")
    right = parse_process(c, base)
    c.eat(")")
    return InName(x, rs, y, r, left, right)


def _eat_role(c: Cursor, base: RoleBase) -> int:
    c.eat("@")
    return _role_index(c, base)


def _eat_role_pair(c: Cursor, base: RoleBase) -> tuple[int, int]:
    c.eat("@")
    c.eat("{")
    r = _role_index(c, base)
    c.eat(",")
    s = _role_index(c, base)
    c.eat("}")
    return r, s


# ---------------------------------------------------------------------------
# problem files


@dataclass(frozen=True)
class ProblemFile:
    base: RoleBase
    kind: str  # 'sequent' | 'derivation' | 'process'
    sequent: Sequent | None = None
    derivation: Derivation | None = None
    process: Process | None = None
    env: tuple[tuple[str, IFormula], ...] = ()


def parse_problem(text: str) -> ProblemFile:
    c = Cursor(tokenize(text))
    t = c.eat_kind("ident", "'base'")
    if t.text != "base":
        raise ParseError("a problem starts with its base declaration", t.line, t.col)
    t = c.peek()
    if t.kind == "num":
        base = rl.finite_base(_num(c))
    elif t.kind == "ident" and t.text == "omega":
        c.next()
        base = rl.OMEGA
    else:
        raise ParseError("expected a role count or 'omega'", t.line, t.col)

    t = c.peek()
    if t.kind == "turnstile":
        g = parse_sequent(c, base)
        _expect_eof(c)
        return ProblemFile(base, "sequent", sequent=g)
    if t.text == "(":
        d = parse_derivation(c, base)
        _expect_eof(c)
        return ProblemFile(base, "derivation", derivation=d)

    env: list[tuple[str, IFormula]] = []
    if t.kind == "ident" and t.text == "env":
        c.next()
        env.append(_parse_assoc(c, base))
        while c.at(","):
            c.eat(",")
            env.append(_parse_assoc(c, base))
        t = c.peek()
    if t.kind == "ident" and t.text == "proc":
        c.next()
        p = parse_process(c, base)
        _expect_eof(c)
        return ProblemFile(base, "process", process=p, env=tuple(env))
    raise ParseError(
        "expected a sequent, a derivation or a process after the base", t.line, t.col
    )


def _parse_assoc(c: Cursor, base: RoleBase) -> tuple[str, IFormula]:
    z = c.eat_kind("ident", "a name").text
    c.eat(":")
    return z, parse_iformula(c, base)


def _expect_eof(c: Cursor):
    t = c.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)


def parse_formula_text(text: str, base: RoleBase) -> Formula:
    c = Cursor(tokenize(text))
    a = parse_formula(c, base)
    _expect_eof(c)
    return a


def parse_roleset_text(text: str, base: RoleBase) -> RoleSet:
    c = Cursor(tokenize(text))
    s = parse_roleset(c, base)
    _expect_eof(c)
    return s
