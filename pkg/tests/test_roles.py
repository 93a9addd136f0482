import pytest
from hypothesis import given, strategies as st

from lmrl import roles as rl

B2 = rl.finite_base(2)
B3 = rl.finite_base(3)


def rs(base, *roles, cofinite=False):
    return rl.roleset(base, roles, cofinite=cofinite)


def test_finite_base_requires_two_roles():
    with pytest.raises(ValueError):
        rl.finite_base(1)


def test_complement_examples():
    assert rl.complement(rs(B3, 0)) == rs(B3, 1, 2)
    assert rl.complement(rs(B3)) == rs(B3, 0, 1, 2)
    assert rl.complement(rs(rl.OMEGA, 0, 1)) == rs(rl.OMEGA, 0, 1, cofinite=True)


def test_disjoint_union_examples():
    assert rl.disjoint_union([rs(B3, 0), rs(B3, 1)]) == rs(B3, 0, 1)
    assert rl.disjoint_union([rs(B3, 0, 1), rs(B3, 1)]) is None
    assert rl.disjoint_union([rs(B2, 0), rs(B2, 1)]) == rs(B2, 0, 1)


def test_disjoint_union_mixed_bases_errors():
    with pytest.raises(ValueError):
        rl.disjoint_union([rs(B2, 0), rs(B3, 1)])


def test_partition_examples():
    assert rl.is_partition_of_full([rs(B3, 0), rs(B3, 1), rs(B3, 2)])
    assert not rl.is_partition_of_full([rs(B3, 0), rs(B3, 1)])
    assert rl.is_partition_of_full(
        [rs(rl.OMEGA, 0), rs(rl.OMEGA, 0, cofinite=True)]
    )


def test_intersect_examples():
    assert rl.intersect(rs(B3, 0, 1), rs(B3, 0, 2)) == rs(B3, 0)
    assert rl.intersect(rs(B3, 0), rs(B3, 1, 2)) == rs(B3)
    assert rl.intersect(
        rs(rl.OMEGA, 0, cofinite=True), rs(rl.OMEGA, 1, cofinite=True)
    ) == rs(rl.OMEGA, 0, 1, cofinite=True)


def test_membership_and_text():
    s = rs(rl.OMEGA, 0, 2, cofinite=True)
    assert 1 in s and 0 not in s and 7 in s
    assert str(s) == "~{0,2}"
    assert str(rs(B2)) == "{}"
    assert str(rs(B3, 0, 2)) == "{0,2}"


def _finite_sets(base):
    return st.builds(
        lambda roles: rl.roleset(base, roles),
        st.frozensets(st.integers(0, base.size - 1)),
    )


def _omega_sets():
    return st.builds(
        lambda roles, cof: rl.roleset(rl.OMEGA, roles, cofinite=cof),
        st.frozensets(st.integers(0, 6)),
        st.booleans(),
    )


def any_sets(base):
    return _omega_sets() if not base.is_finite else _finite_sets(base)


@given(st.one_of(_finite_sets(B2), _finite_sets(B3), _omega_sets()))
def test_complement_involutive(s):
    assert rl.complement(rl.complement(s)) == s


@given(st.one_of(_finite_sets(B3), _omega_sets()))
def test_partition_with_complement(s):
    assert rl.is_partition_of_full([s, rl.complement(s)])


@given(_finite_sets(B3), _finite_sets(B3))
def test_multicut_complement_identity(r1, r2):
    # complement(R1 n R2) = complement(R1) + complement(R2)  when the
    # complements are disjoint (the step the n-sequent cut relies on)
    c1, c2 = rl.complement(r1), rl.complement(r2)
    if rl.is_disjoint(c1, c2):
        assert rl.complement(rl.intersect(r1, r2)) == rl.disjoint_union([c1, c2])


@given(_omega_sets(), _omega_sets())
def test_intersect_is_meet(r1, r2):
    m = rl.intersect(r1, r2)
    for r in range(10):
        assert (r in m) == ((r in r1) and (r in r2))


@given(_finite_sets(B3), _finite_sets(B3))
def test_union_of_disjoint_agrees_pointwise(r1, r2):
    u = rl.disjoint_union([r1, r2])
    if u is not None:
        for r in range(3):
            assert (r in u) == ((r in r1) or (r in r2))


def test_canonical_structural_equality():
    # cofinite form under a finite base normalizes away
    assert rl.roleset(B3, [0], cofinite=True) == rs(B3, 1, 2)
    with pytest.raises(ValueError):
        rl.RoleSet(B3, frozenset((0,)), cofinite=True)
