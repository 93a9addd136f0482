"""Text output for every value the toolkit manipulates.

The forms printed here re-parse: pretty output is the same grammar the
parser reads (see parser.py for the grammar summary).
"""

from __future__ import annotations

from .roles import RoleBase
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
)
from .derivation import (
    Calculus,
    DBangNegWeaken,
    DForallNeg,
    DForallPos,
    DId,
    DOnePos,
    Derivation,
    RULE_LABELS,
)


def format_term(t: Term) -> str:
    match t:
        case Var(name):
            return name
        case Fun(symbol, args):
            return f"{symbol}({', '.join(format_term(a) for a in args)})"
    raise TypeError(t)


def _atomic(a: Formula) -> bool:
    from .processes import Msg

    return isinstance(a, (Atom, One)) or isinstance(a, (Bang, Msg))


def format_formula(a: Formula) -> str:
    from .processes import Msg

    match a:
        case Atom(pred, args):
            return pred if not args else f"{pred}({', '.join(format_term(t) for t in args)})"
        case One(r):
            return f"one[{r}]"
        case Tensor(r, left, right):
            return f"{_operand(left)} *[{r}] {_operand(right)}"
        case With(r, left, right):
            return f"{_operand(left)} &[{r}] {_operand(right)}"
        case Bang(r, body):
            return f"![{r}] {_prefix_body(body)}"
        case Forall(r, var, body):
            return f"all[{r}] {var}. {format_formula(body)}"
        case Msg(r, s, body):
            return f"msg[{r},{s}] {_prefix_body(body)}"
    raise TypeError(a)


def _operand(a: Formula) -> str:
    s = format_formula(a)
    return s if _atomic(a) else f"({s})"


def _prefix_body(a: Formula) -> str:
    match a:
        case Atom() | One():
            return format_formula(a)
        case _:
            return f"({format_formula(a)})"


def format_iformula(f: IFormula) -> str:
    return f"[{f.roles}] {format_formula(f.body)}"


def format_sequent(g: Sequent) -> str:
    if not g.items:
        return "|-"
    return "|- " + ", ".join(format_iformula(f) for f in g.items)


def format_base(base: RoleBase) -> str:
    return f"base {base.size}" if base.is_finite else "base omega"


def format_derivation(d: Derivation, indent: int = 0) -> str:
    pad = "  " * indent
    head = f"(rule {d.rule}"
    match d:
        case DId() | DOnePos():
            pass
        case DForallNeg(witness=t):
            head += f" :major {len(d.concl) - 1} :witness {format_term(t)}"
        case DForallPos(eigen=z):
            head += f" :major {len(d.concl) - 1} :eigen {z}"
        case _:
            head += f" :major {len(d.concl) - 1}"
    head += f" :concl {format_sequent(d.concl)}"
    if not d.premises:
        return pad + head + ")"
    lines = [pad + head]
    for p in d.premises:
        lines.append(format_derivation(p, indent + 1))
    return "\n".join(lines) + ")"


def rule_label(d: Derivation, calc: Calculus) -> str:
    return RULE_LABELS[calc][d.rule]


def format_process(p) -> str:
    from .processes import (
        Case,
        ClientRequest,
        Cut,
        InEmpty,
        InName,
        MsgRecv,
        MsgSend,
        MsgSkipIn,
        MsgSkipOut,
        OutEmpty,
        OutName,
        SelL,
        SelR,
        ServerAccept,
    )

    match p:
        case Cut(x, ann, parts):
            inner = " | ".join(format_process(q) for q in parts)
            ann_s = f": {format_formula(ann)} " if ann is not None else ""
            return f"new {x}{ann_s}.( {inner} )"
        case OutName(x, rs, y, r, body):
            return f"{x}{rs}[{y}]@{r}.{format_process(body)}"
        case InName(x, rs, y, r, left, right):
            return f"{x}{rs}({y})@{r}.({format_process(left)} | {format_process(right)})"
        case OutEmpty(x, rs, r, body):
            return f"{x}{rs}[]@{r}.{format_process(body)}"
        case InEmpty(x, rs, r):
            return f"{x}{rs}()@{r}.end"
        case SelL(x, rs, r, body):
            return f"{x}{rs}[inl]@{r}.{format_process(body)}"
        case SelR(x, rs, r, body):
            return f"{x}{rs}[inr]@{r}.{format_process(body)}"
        case Case(x, rs, r, left, right):
            return f"{x}{rs}(case)@{r}.({format_process(left)}, {format_process(right)})"
        case ServerAccept(x, rs, y, r, body):
            return f"!{x}{rs}({y})@{r}.{format_process(body)}"
        case ClientRequest(x, rs, y, r, body):
            return f"?{x}{rs}[{y}]@{r}.{format_process(body)}"
        case MsgSkipIn(x, rs, r, s, body):
            return f"{x}{rs}(skip)@{{{r},{s}}}.{format_process(body)}"
        case MsgSkipOut(x, rs, r, s, body):
            return f"{x}{rs}[skip]@{{{r},{s}}}.{format_process(body)}"
        case MsgRecv(x, rs, r, s, body):
            return f"{x}{rs}(recv)@{{{r},{s}}}.{format_process(body)}"
        case MsgSend(x, rs, r, s, body):
            return f"{x}{rs}[send]@{{{r},{s}}}.{format_process(body)}"
    raise TypeError(p)


def format_env(env) -> str:
    items = env.items() if hasattr(env, "items") else env
    return ", ".join(f"{z} : {format_iformula(f)}" for z, f in items)
