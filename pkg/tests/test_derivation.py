import glob
import os

import pytest

from lmrl import roles as rl
from lmrl.derivation import (
    Calculus,
    DForallPos,
    DId,
    DOnePos,
    DTensorPos,
    Derivation,
    RuleViolation,
    check,
    checks,
    dualize,
    height,
)
from lmrl.parser import parse_problem
from lmrl.syntax import Atom

CORPUS = os.path.join(os.path.dirname(__file__), "..", "corpus", "logic")

B2 = rl.finite_base(2)
B3 = rl.finite_base(3)
a = Atom("a")


def load(name):
    with open(os.path.join(CORPUS, name + ".drv")) as f:
        return parse_problem(f.read()).derivation


ALL_FIXTURES = sorted(
    os.path.basename(p)[:-4] for p in glob.glob(os.path.join(CORPUS, "*.drv"))
)
POSITIVE = [n for n in ALL_FIXTURES if n.endswith("-pos")]
NEGATIVE = [n for n in ALL_FIXTURES if n.endswith("-neg")]


def test_rule_fixture_coverage():
    rules = [
        "id",
        "one-pos",
        "one-neg",
        "tensor-neg",
        "tensor-pos",
        "with-neg-l",
        "with-neg-r",
        "with-pos",
        "bang-pos",
        "bang-neg-weaken",
        "bang-neg-derelict",
        "bang-neg-contract",
        "forall-neg",
        "forall-pos",
    ]
    for rule in rules:
        assert any(n.startswith(rule) for n in POSITIVE), f"no positive fixture for {rule}"
        assert any(n.startswith(rule) for n in NEGATIVE), f"no negative fixture for {rule}"


@pytest.mark.parametrize("name", POSITIVE)
def test_positive_fixture_checks(name):
    assert checks(load(name), Calculus.CONJ)


@pytest.mark.parametrize("name", NEGATIVE)
def test_negative_fixture_rejected(name):
    with pytest.raises(RuleViolation):
        check(load(name), Calculus.CONJ)


def test_id_partition_example():
    d = DId(a, (rl.roleset(B3, [0]), rl.roleset(B3, [1]), rl.roleset(B3, [2])))
    assert checks(d, Calculus.CONJ)
    bad = DId(a, (rl.roleset(B2, [0]), rl.roleset(B2, [0])))
    with pytest.raises(RuleViolation) as err:
        check(bad, Calculus.CONJ)
    assert "partition" in str(err.value)


def test_forall_neg_witness_fixture():
    # all-neg over the identity, instantiating with a context variable
    d = load("forall-neg-pos")
    got = check(d, Calculus.CONJ)
    assert len(got) == 2


def test_heights():
    leaf = DId(a, (rl.roleset(B2, [0]), rl.roleset(B2, [1])))
    assert height(leaf) == 1
    assert height(load("one-neg-pos")) == 2
    assert height(DTensorPos(0, leaf, 0, leaf, 0)) == 2


def test_dualize_id_example():
    leaf = DId(a, (rl.roleset(B2, [0]), rl.roleset(B2, [1])))
    dd = dualize(leaf)
    assert checks(dd, Calculus.DISJ)
    assert [str(f.roles) for f in dd.concl] == ["{1}", "{0}"]


def test_dualize_involutive():
    for name in POSITIVE:
        d = load(name)
        assert dualize(dualize(d)).concl == d.concl


def test_dualize_weaken_polarity():
    d = load("bang-neg-weaken-pos")
    dd = dualize(d)
    assert checks(dd, Calculus.DISJ)
    # the weakened occurrence now sits inside its role set
    wk = dd
    assert wk.rule == "bang-neg-weaken"
    assert wk.r in wk.rs


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_duality_iff(name):
    d = load(name)
    assert checks(d, Calculus.CONJ) == checks(dualize(d), Calculus.DISJ)
    assert height(dualize(d)) == height(d)


def test_eigenvariable_capture_rejected():
    px = Atom("p", (__import__("lmrl.syntax", fromlist=["Var"]).Var("x"),))
    idpx = DId(px, (rl.roleset(B2, [0]), rl.roleset(B2, [1])))
    bad = DForallPos(0, "x", idpx, 0)
    with pytest.raises(RuleViolation) as err:
        check(bad, Calculus.CONJ)
    assert "eigenvariable" in str(err.value)


def test_one_rules_polarity():
    assert checks(DOnePos(rl.roleset(B2, [0]), 0), Calculus.CONJ)
    assert not checks(DOnePos(rl.roleset(B2, [1]), 0), Calculus.CONJ)
    # the disjunctive reading flips the test
    assert checks(DOnePos(rl.roleset(B2, [1]), 0), Calculus.DISJ)


def test_omega_base_kernel():
    # the kernel is generic over the unbounded base: cofinite sets work in
    # identities and the duality swaps finite and cofinite parts
    s = rl.roleset(rl.OMEGA, [0, 3])
    d = DId(a, (s, rl.complement(s)))
    assert checks(d, Calculus.CONJ)
    dd = dualize(d)
    assert checks(dd, Calculus.DISJ)
    assert dd.concl[0].roles.cofinite


DISJ_FIXTURES = sorted(
    os.path.basename(p)[:-4]
    for p in glob.glob(os.path.join(CORPUS, "disj", "*.drv"))
)


@pytest.mark.parametrize("name", DISJ_FIXTURES)
def test_disjunctive_fixture_classification(name):
    with open(os.path.join(CORPUS, "disj", name + ".drv")) as f:
        d = parse_problem(f.read()).derivation
    assert checks(d, Calculus.DISJ) == name.endswith("-pos")
