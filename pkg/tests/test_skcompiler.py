import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prosk.errors import NotGenerating, UsageError
from prosk.matgroups import GroupDescriptor, element, ops_for
from prosk.skcompiler import (
    CompilePlan,
    CompilerSession,
    GeneratingSet,
    Word,
    build_base_table,
    compile_element,
    evaluate,
    sample_generating_set,
)

SL2_81 = GroupDescriptor.parse("SL:d=2,Zp:p=3,N=4")
OPS = ops_for(SL2_81)
GENS = sample_generating_set(SL2_81, 3, 42)

op_codes = st.lists(st.integers(0, 5), min_size=0, max_size=15)


# --- word algebra ------------------------------------------------------------


@given(op_codes, op_codes)
@settings(max_examples=60, deadline=None)
def test_concat_evaluates_to_product(a, b):
    wa = Word(GENS.id, np.array(a, np.int32))
    wb = Word(GENS.id, np.array(b, np.int32))
    assert evaluate(wa.concat(wb), GENS) == OPS.mul(evaluate(wa, GENS), evaluate(wb, GENS))


@given(op_codes)
@settings(max_examples=60, deadline=None)
def test_inverse_word(a):
    w = Word(GENS.id, np.array(a, np.int32))
    assert evaluate(w.inverse(), GENS) == OPS.inv(evaluate(w, GENS))
    assert len(w.inverse()) == len(w)


@given(op_codes, op_codes)
@settings(max_examples=40, deadline=None)
def test_commutator_word(a, b):
    wa = Word(GENS.id, np.array(a, np.int32))
    wb = Word(GENS.id, np.array(b, np.int32))
    c = wa.commutator(wb)
    assert len(c) == 2 * (len(wa) + len(wb))
    assert evaluate(c, GENS) == OPS.commutator(evaluate(wa, GENS), evaluate(wb, GENS))


def test_seam_cancellation():
    # g0 g1 . g1^-1 g2  collapses to  g0 g2
    wa = Word(GENS.id, np.array([0, 2], np.int32))
    wb = Word(GENS.id, np.array([3, 4], np.int32))
    assert wa.concat(wb).ops.tolist() == [0, 4]


def test_word_json_roundtrip():
    w = Word(GENS.id, np.array([0, 3, 5, 1], np.int32))
    w2 = Word.from_json(w.to_json())
    assert w2.gens_id == w.gens_id and w2.ops.tolist() == w.ops.tolist()
    with pytest.raises(UsageError):
        Word.from_json({"gens": "x", "ops": [[0, 2]]})


def test_words_refuse_foreign_sets():
    other = sample_generating_set(SL2_81, 3, 43)
    w = Word(GENS.id, np.array([0], np.int32))
    v = Word(other.id, np.array([0], np.int32))
    with pytest.raises(UsageError):
        w.concat(v)


def test_generating_set_ids():
    assert sample_generating_set(SL2_81, 3, 42).id == GENS.id
    assert sample_generating_set(SL2_81, 3, 43).id != GENS.id


def test_evaluate_bounds_check():
    from prosk.errors import IndexOutOfRange

    w = Word(GENS.id, np.array([7], np.int32))  # generator index 3 of a 3-set
    with pytest.raises(IndexOutOfRange):
        evaluate(w, GENS)


# --- base tables -------------------------------------------------------------


def test_base_table_covers_quotient():
    table = build_base_table(SL2_81, 2, GENS)
    assert table.level == 2
    assert table.count == 648
    rng = np.random.default_rng(50)
    for _ in range(40):
        g = OPS.sample_uniform(rng)
        w = table.lookup(g)
        assert len(w) <= table.l0
        assert OPS.key(evaluate(w, GENS), level=2) == OPS.key(g, level=2)


def test_base_table_rejects_non_generating():
    # a single upper-triangular element generates an abelian subgroup
    g = element(SL2_81, [[1, 1], [0, 1]])
    gens = GeneratingSet(SL2_81, [g])
    with pytest.raises(NotGenerating):
        build_base_table(SL2_81, 1, gens)


# --- plans -------------------------------------------------------------------


def test_plan_parameters():
    dy = CompilePlan()
    assert dy.D == 2 and dy.budget_base(OPS) == 44  # A = 2
    tri = CompilePlan("triadic")
    assert tri.D == 3 and tri.budget_base(OPS) == 9**6
    with pytest.raises(UsageError):
        CompilePlan("quartic")
    nd = GroupDescriptor.parse("Nottingham,Fq[[t]]:q=5,N=9")
    assert CompilePlan("triadic").default_n0(nd) == 3
    assert CompilePlan("triadic", n0=2).n_base(nd) == 6
    assert CompilePlan().default_n0(SL2_81) == 1


# --- compilation -------------------------------------------------------------


def test_compile_exact_and_budgeted():
    table = build_base_table(SL2_81, 2, GENS)
    sess = CompilerSession(GENS, table)
    rng = np.random.default_rng(51)
    for n in (1, 2, 3, 4):
        for _ in range(5):
            target = OPS.sample_uniform(rng)
            word, cert = sess.compile(target, n)
            got = evaluate(word, GENS)
            assert OPS.key(got, level=n) == OPS.key(target, level=n)
            assert cert.length == len(word) <= cert.budget
            assert cert.residual_depth >= n
            assert cert.gens_id == GENS.id


def test_compile_certificate_exponent():
    table = build_base_table(SL2_81, 2, GENS)
    sess = CompilerSession(GENS, table)
    rng = np.random.default_rng(52)
    t = OPS.sample_uniform(rng)
    _, c2 = sess.compile(t, 2)
    _, c3 = sess.compile(t, 3)
    _, c4 = sess.compile(t, 4)
    assert c2.i == 0 and c3.i == 1 and c4.i == 1
    assert c3.budget == c2.B * c2.l0


def test_compile_nottingham_triadic():
    desc = GroupDescriptor.parse("Nottingham,Fq[[t]]:q=5,N=9")
    ops = ops_for(desc)
    gens = sample_generating_set(desc, 3, 7)
    plan = CompilePlan("triadic", n0=2)
    table = build_base_table(desc, plan.n_base(desc), gens)
    rng = np.random.default_rng(53)
    for _ in range(3):
        target = ops.sample_uniform(rng)
        word, cert = compile_element(target, 9, table, plan)
        assert ops.key(evaluate(word, gens), level=9) == ops.key(target, level=9)
        assert len(word) <= cert.budget
        assert cert.plan == "triadic" and cert.D == 3


def test_compile_memo_reuse():
    table = build_base_table(SL2_81, 2, GENS)
    sess = CompilerSession(GENS, table)
    rng = np.random.default_rng(54)
    t = OPS.sample_uniform(rng)
    w1, _ = sess.compile(t, 4)
    w2, _ = sess.compile(t, 4)
    assert w1.ops.tolist() == w2.ops.tolist()


def test_compile_rejects_foreign_target():
    other = GroupDescriptor.parse("SL:d=2,Zp:p=3,N=3")
    table = build_base_table(SL2_81, 2, GENS)
    sess = CompilerSession(GENS, table)
    t = ops_for(other).identity()
    with pytest.raises(UsageError):
        sess.compile(t, 2)


def test_compile_level_out_of_range():
    from prosk.errors import PrecisionExceedsTruncation

    table = build_base_table(SL2_81, 2, GENS)
    sess = CompilerSession(GENS, table)
    with pytest.raises(PrecisionExceedsTruncation):
        sess.compile(OPS.identity(), 9)
