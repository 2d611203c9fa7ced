import pytest

from conftest import parse, run
from revpi import bs, syntax
from revpi.bs import (
    BsLabel, BsStep, CPar, CRes, Caused, Plain, bs_object_caused,
    bs_transitions, cau, cause_replace, erase_lambda, gamma, lift_bs,
    pi_transitions,
)
from revpi.memory import Memory, MemoryKind, mem_new
from revpi.syntax import (
    STAR, STAR_SET, BoundOut, FreeOut, InAct, Label, Nil, PiBoundOut,
    PiFreeOut, PiIn, PiTau, Tau,
)


def bsf(text):
    return lift_bs(parse(text))


def find(batch, pred):
    hits = [pair for pair in batch if pred(pair[0])]
    assert len(hits) == 1
    return hits[0]


# --------------------------------------------------------------------------- #
# transitions
# --------------------------------------------------------------------------- #

def test_output_creates_cause_wrapper():
    (label, target), = bs_transitions(bsf("b!a.0"))
    assert label == BsLabel(1, PiFreeOut("b", "a"), frozenset())
    assert target == Caused(frozenset({1}), Plain(Nil()))


def test_cause_wrapper_accumulates():
    a = Caused(frozenset({1}), bsf("c!d.0"))
    (label, target), = bs_transitions(a)
    assert label == BsLabel(2, PiFreeOut("c", "d"), frozenset({1}))
    assert target == Caused(frozenset({1}), Caused(frozenset({2}), Plain(Nil())))


def test_communication_merges_causes():
    # hand-run: both premises get key 1; the conclusion replaces it by the
    # other side's (empty) causes on each half
    a = bsf("a!b.0 | a?(x).d!e.0")
    taus = [pair for pair in bs_transitions(a) if isinstance(pair[0].act, PiTau)]
    assert len(taus) == 1
    label, target = taus[0]
    assert label == BsLabel(None, PiTau(), frozenset())
    assert target == CPar(
        Caused(frozenset(), Plain(Nil())),
        Caused(frozenset(), Plain(parse("d!e.0"))),
    )
    # the dependent output then carries no causes
    follow = bs_transitions(target, used=frozenset({1}))
    (flabel, _), = [p for p in follow if isinstance(p[0].act, PiFreeOut)]
    assert flabel == BsLabel(2, PiFreeOut("d", "e"), frozenset())


def test_open_consumes_restriction():
    a = bsf("nu a.(b!a.0)")
    (label, target), = bs_transitions(a)
    assert label == BsLabel(1, PiBoundOut("b", "a"), frozenset())
    assert target == Caused(frozenset({1}), Plain(Nil()))


def test_close_rewraps():
    a = bsf("nu a.(b!a.0) | b?(x).x!c.0")
    taus = [p for p in bs_transitions(a) if isinstance(p[0].act, PiTau)]
    assert len(taus) == 1
    _, target = taus[0]
    assert isinstance(target, CRes) and target.name == "a"
    assert erase_lambda(target) == parse("nu a.(0 | a!c.0)")


def test_private_subject_blocked():
    a = bsf("nu a.(b!a.0 | a?(x).0)")
    kinds = [type(p[0].act) for p in bs_transitions(a)]
    assert kinds == [PiBoundOut]


def test_par_requires_fresh_key():
    # a key already spent stays spent even though the term forgot it
    a = bsf("a!b.0 | a?(x).d!e.0")
    (_, target), = [p for p in bs_transitions(a) if isinstance(p[0].act, PiTau)]
    batch = bs_transitions(target, used=frozenset({1}))
    assert all(p[0].key != 1 for p in batch if p[0].key is not None)


# --------------------------------------------------------------------------- #
# cause surgery and erasure
# --------------------------------------------------------------------------- #

def test_cause_replace():
    assert cause_replace(Caused(frozenset({1}), Plain(Nil())), 1, frozenset()) \
        == Caused(frozenset(), Plain(Nil()))
    a = Caused(frozenset({2}), Plain(Nil()))
    assert cause_replace(a, 1, frozenset({9})) == a
    assert cause_replace(Caused(frozenset({1, 3}), Plain(Nil())), 1, frozenset({2})) \
        == Caused(frozenset({2, 3}), Plain(Nil()))


def test_cau():
    assert cau(Plain(parse("b!a.0"))) == frozenset()
    a = Caused(frozenset({1}), CPar(Caused(frozenset({2}), Plain(Nil())), Plain(Nil())))
    assert cau(a) == frozenset({1, 2})


def test_visible_step_records_its_key():
    for text in ("b!a.0", "b?(x).0"):
        (label, target), = bs_transitions(bsf(text))
        assert label.key in cau(target)


def test_erase_lambda():
    assert erase_lambda(Caused(frozenset({1}), Plain(Nil()))) == Nil()
    assert erase_lambda(Plain(parse("b!a.0"))) == parse("b!a.0")
    a = CRes("a", Caused(frozenset({1}), Plain(parse("b!a.0"))))
    assert erase_lambda(a) == parse("nu a.(b!a.0)")


def test_erase_lambda_ignores_cause_surgery():
    a = Caused(frozenset({1}), CPar(Plain(parse("b!a.0")), Plain(Nil())))
    assert erase_lambda(cause_replace(a, 1, frozenset({7}))) == erase_lambda(a)


# --------------------------------------------------------------------------- #
# label mapping
# --------------------------------------------------------------------------- #

def test_gamma():
    empty = mem_new(MemoryKind.RPI)
    used = Memory(MemoryKind.RPI, frozenset({1}))
    assert gamma(Label(1, STAR_SET, STAR, BoundOut("b", "a", empty))) \
        == (1, PiBoundOut("b", "a"))
    assert gamma(Label(2, frozenset({1}), STAR, BoundOut("b", "a", used))) \
        == (2, PiFreeOut("b", "a"))
    assert gamma(Label(1, STAR_SET, STAR, Tau())) == (None, PiTau())
    assert gamma(Label(3, STAR_SET, 1, InAct("b", "x"))) == (3, PiIn("b", "x"))


# --------------------------------------------------------------------------- #
# object causality on reference traces
# --------------------------------------------------------------------------- #

def _run_bs(text, picks):
    a = lift_bs(parse(text))
    used = frozenset()
    steps = []
    for pick in picks:
        batch = bs_transitions(a, used=used)
        hits = [(l, t) for l, t in batch if pick(l)]
        assert len(hits) == 1, [l for l, _ in batch]
        label, target = hits[0]
        steps.append(BsStep(label, a, target))
        if label.key is not None:
            used = used | {label.key}
        else:
            used = used | {min(set(range(1, len(used) + 2)) - used)}
        a = target
    return steps


def test_object_cause_via_extruded_names():
    # two extrusions feeding a later output that uses both names
    steps = _run_bs(
        "nu a.(nu b2.(c!b2.0 | d!a.0 | b2!a.0))",
        [lambda l: l.act == PiBoundOut("c", "b2"),
         lambda l: l.act == PiBoundOut("d", "a"),
         lambda l: l.act == PiFreeOut("b2", "a")],
    )
    assert bs_object_caused(steps, 0, 2)
    assert bs_object_caused(steps, 1, 2)
    assert not bs_object_caused(steps, 0, 1)


def test_object_cause_via_input_variable():
    steps = _run_bs("b?(x).x!c.0",
                    [lambda l: isinstance(l.act, PiIn)])
    a = steps[-1].target
    batch = bs_transitions(a, used=frozenset({1}))
    (label, target), = batch
    steps.append(BsStep(label, a, target))
    assert label.act == PiFreeOut("x", "c")
    assert bs_object_caused(steps, 0, 1)


def test_tau_introduces_nothing():
    steps = _run_bs("a!b.0 | a?(x).d!e.0",
                    [lambda l: isinstance(l.act, PiTau)])
    a = steps[-1].target
    (label, target), = [p for p in bs_transitions(a, used=frozenset({1}))
                        if isinstance(p[0].act, PiFreeOut)]
    steps.append(BsStep(label, a, target))
    assert not bs_object_caused(steps, 0, 1)


# --------------------------------------------------------------------------- #
# the plain oracle
# --------------------------------------------------------------------------- #

def test_pi_communication():
    got = pi_transitions(parse("b!a.0 | b?(x).x!c.0"))
    taus = [(l, t) for l, t in got if isinstance(l, PiTau)]
    assert taus == [(PiTau(), parse("0 | a!c.0"))]


def test_pi_open():
    got = pi_transitions(parse("nu a.(b!a.0)"))
    assert got == ((PiBoundOut("b", "a"), Nil()),)


def test_pi_nil_and_blocked():
    assert pi_transitions(Nil()) == ()
    got = pi_transitions(parse("nu a.(a!b.0)"))
    assert got == ()


def test_pi_close():
    got = pi_transitions(parse("nu a.(b!a.0) | b?(x).x!c.0"))
    taus = [(l, t) for l, t in got if isinstance(l, PiTau)]
    assert taus == [(PiTau(), parse("nu a.(0 | a!c.0)"))]


def test_bs_trace_json():
    steps = _run_bs("a!b.0 | a?(x).d!e.0", [lambda l: isinstance(l.act, PiTau)])
    data = bs.bs_trace_json(steps)
    assert data[0]["key"] is None
    assert data[0]["act"] == {"kind": "tau"}
    assert data[0]["cause"] == []
    import json
    json.dumps(data)
