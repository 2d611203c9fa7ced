import pytest

from conftest import fire, parse, run, start
from revpi import semantics, syntax
from revpi.memory import Memory, MemoryKind, mem_new
from revpi.semantics import (
    NoSuchTransitionError, backward_transitions, cause_update,
    forward_transitions, step,
)
from revpi.syntax import (
    STAR, STAR_SET, AnnotatedName, Direction, FreeOut, InAct, Label, Leaf,
    Nil, Output, PastInput, PastOutput, RPar, RRes, Tau,
)


def ann(name, inst=STAR):
    return AnnotatedName(name, inst)


def labels(batch):
    return [syntax.format(t.label) for t in batch]


# --------------------------------------------------------------------------- #
# visible pair and communication
# --------------------------------------------------------------------------- #

def test_single_output():
    x = start("b!a.0")
    batch = forward_transitions(x)
    assert labels(batch) == ["(1,{*},*): b!a"]
    assert batch[0].target == PastOutput(ann("b"), ann("a"), 1, STAR_SET, Leaf(Nil()))


def test_visible_pair_and_tau():
    x = start("b!a.0 | b?(x).x!c.0")
    batch = forward_transitions(x)
    assert labels(batch) == [
        "(1,{*},*): b!a",
        "(1,{*},*): b?(x)",
        "(1,{*},*): tau",
    ]
    tau = batch[-1]
    assert tau.target == RPar(
        PastOutput(ann("b"), ann("a"), 1, STAR_SET, Leaf(Nil())),
        PastInput(ann("b"), "x", 1, STAR_SET,
                  Leaf(Output(ann("a", 1), ann("c"), Nil()))),
    )


def test_backward_of_initial_is_empty():
    for text in ("0", "b!a.0", "nu a.(b!a.0 | a?(x).0)"):
        assert backward_transitions(start(text)) == ()


def test_communication_undo_is_joint():
    (tau,) = run("b!a.0 | b?(x).x!c.0", ["tau"])
    back = backward_transitions(tau.target)
    assert labels(back) == ["(1,{*},*): tau"]
    assert back[0].target == tau.source


def test_separate_past_actions_reverse_in_any_order():
    out, inp = run("b!a.0 | b?(x).x!c.0", ["b!a", "b?(x)"])
    back = backward_transitions(inp.target)
    assert len(back) == 2
    assert {t.label.key for t in back} == {1, 2}


# --------------------------------------------------------------------------- #
# extrusion and cause refinement
# --------------------------------------------------------------------------- #

def test_parallel_extrusion_choice():
    t1, t2 = run("nu a.(b!a.0 | c!a.0 | a?(x).0)", ["b!(nu", "c!(nu"])
    state = t2.target
    assert state.mem == Memory(MemoryKind.RPI, frozenset({1, 2}))
    ins = forward_transitions(state)
    assert labels(ins) == ["(3,{1},*): a?(x)", "(3,{2},*): a?(x)"]


def test_private_subject_is_blocked():
    x = start("nu a.(b!a.0 | a?(x).0)")
    assert labels(forward_transitions(x)) == ["(1,{*},*): b!(nu a:set{})"]


def test_indexed_set_forces_first_extruder():
    steps = run("nu a.(b!a.0 | c!a.0 | a?(x).0)",
                ["b!(nu", "c!(nu", "a?(x)"], MemoryKind.BSC)
    assert [syntax.format(t.label) for t in steps] == [
        "(1,{*},*): b!(nu a:iset{}@*)",
        "(2,{*,1},*): c!(nu a:iset{1}@1)",
        "(3,{*,1},*): a?(x)",
    ]
    final = steps[-1].target
    assert final.mem == Memory(MemoryKind.BSC, frozenset({1, 2}), 1)


def test_cause_set_takes_all_extruders():
    steps = run("nu a.(b!a.0 | c!a.0 | a?(x).0)",
                ["b!(nu", "c!(nu", "a?(x)"], MemoryKind.DCC)
    assert syntax.format(steps[-1].label) == "(3,{*,1,2},*): a?(x)"
    assert steps[-1].target.mem == Memory(
        MemoryKind.DCC, frozenset({1, 2}), frozenset({STAR, 1, 2}))


def test_chosen_cause_blocks_extruder_undo():
    t1, t2, t3 = run("nu a.(b!a.0 | c!a.0 | a?(x).0)",
                     ["b!(nu", "c!(nu", "{2}"])
    back = backward_transitions(t3.target)
    # the non-chosen extruder reverses freely, the chosen one must wait
    assert {t.label.key for t in back} == {1, 3}


def test_open_label_carries_pre_add_memory():
    t1 = run("nu a.(b!a.0 | c!a.0 | a?(x).0)", ["b!(nu"])[0]
    assert t1.label.act.mem == mem_new(MemoryKind.RPI)
    t2 = fire(t1.target, "c!(nu")
    assert t2.label.act.mem == Memory(MemoryKind.RPI, frozenset({1}))


# --------------------------------------------------------------------------- #
# close
# --------------------------------------------------------------------------- #

def test_close_rewraps_restriction():
    (tau,) = run("nu a.(b!a.0) | b?(x).x!c.0", ["tau"])
    target = tau.target
    assert isinstance(target, RRes) and target.mem == mem_new(MemoryKind.RPI)
    inner_left = target.body.left
    assert isinstance(inner_left, RRes)
    assert inner_left.mem == Memory(MemoryKind.RPI, frozenset({1}))
    # received private name stays unusable as a subject
    assert forward_transitions(target) == ()
    # and the whole exchange undoes in one step
    back = backward_transitions(target)
    assert labels(back) == ["(1,{*},*): tau"]
    assert back[0].target == tau.source


def test_close_strips_index():
    (tau,) = run("nu a.(b!a.0) | b?(x).x!c.0", ["tau"], MemoryKind.BSC)
    inner_left = tau.target.body.left
    assert inner_left.mem == Memory(MemoryKind.BSC, frozenset({1}), STAR)
    assert backward_transitions(tau.target)[0].target == tau.source


def test_reopen_after_close():
    tau, reopen = run("nu a.(b!a.d!a.0) | b?(x).0", ["tau", "d!(nu"])
    assert syntax.format(reopen.label) == "(2,{*},*): d!(nu a:set{})"
    outer = reopen.target
    assert outer.mem == Memory(MemoryKind.RPI, frozenset({2}))
    assert outer.body.left.mem == Memory(MemoryKind.RPI, frozenset({1, 2}))


def test_com_under_restriction_keeps_it_private():
    (tau,) = run("nu a.(b!a.0 | b?(x).x!c.0)", ["tau"])
    assert isinstance(tau.target, RRes)
    assert tau.target.mem == mem_new(MemoryKind.RPI)
    # a!c is stuck behind the still-private name
    assert forward_transitions(tau.target) == ()


def test_instantiator_meets_cause_condition():
    # after close-c, the received channel's instantiator is the close key;
    # a later cause refinement must pick an extruder from the memory
    t_open, t_close, t_use = run("nu a.(b!a.0 | c!a.0) | c?(x).x!d.0",
                                 ["b!(nu", "tau", "a!d"])
    assert t_use.label.cause == frozenset({1})
    assert t_use.label.inst == 2


# --------------------------------------------------------------------------- #
# cause update
# --------------------------------------------------------------------------- #

def test_cause_update_hits_keyed_prefix():
    x = PastOutput(ann("b"), ann("a"), 1, STAR_SET, Leaf(Nil()))
    got = cause_update(x, 1, frozenset({2}))
    assert got == PastOutput(ann("b"), ann("a"), 1, frozenset({2}), Leaf(Nil()))


def test_cause_update_misses_other_keys():
    x = PastOutput(ann("b"), ann("a"), 3, STAR_SET, Leaf(Nil()))
    assert cause_update(x, 1, frozenset({2})) == x


def test_cause_update_distributes_over_par():
    x = RPar(PastOutput(ann("b"), ann("a"), 1, STAR_SET, Leaf(Nil())),
             PastOutput(ann("c"), ann("d"), 2, STAR_SET, Leaf(Nil())))
    got = cause_update(x, 2, frozenset({1}))
    assert got.left == x.left
    assert got.right.cause == frozenset({1})


# --------------------------------------------------------------------------- #
# step selection
# --------------------------------------------------------------------------- #

def test_step_forward_and_back():
    x = start("b!a.0 | b?(x).x!c.0")
    tau = fire(x, "tau")
    y = step(x, tau.label, Direction.FORWARD)
    assert y == tau.target
    assert step(y, tau.label, Direction.BACKWARD) == x


def test_step_unknown_label():
    x = start("b!a.0")
    ghost = Label(1, STAR_SET, STAR, FreeOut("z", "w"))
    with pytest.raises(NoSuchTransitionError) as exc:
        step(x, ghost, Direction.FORWARD)
    assert "nearest by key" in str(exc.value)


def test_step_with_noncanonical_key():
    x = start("b!a.0")
    lbl = Label(5, STAR_SET, STAR, FreeOut("b", "a"))
    y = step(x, lbl, Direction.FORWARD)
    assert syntax.keys(y) == frozenset({5})


# --------------------------------------------------------------------------- #
# engine invariants
# --------------------------------------------------------------------------- #

def test_key_discipline_along_runs(corpus_entries):
    for name, p in corpus_entries[:20]:
        for kind in MemoryKind:
            x = syntax.initial(p, kind)
            frontier = [x]
            for _ in range(3):
                nxt = []
                for state in frontier:
                    for t in semantics.all_transitions(state, kind):
                        if t.dir is Direction.FORWARD:
                            assert t.label.key not in syntax.keys(t.source)
                            assert t.label.key in syntax.keys(t.target)
                        else:
                            assert t.label.key in syntax.keys(t.source)
                            assert t.label.key not in syntax.keys(t.target)
                        syntax.check_key_invariant(t.target)
                        nxt.append(t.target)
                frontier = nxt


def test_tau_labels_are_anonymous(corpus_entries):
    for name, p in corpus_entries[:20]:
        x = syntax.initial(p, MemoryKind.RPI)
        for t in forward_transitions(x):
            if isinstance(t.label.act, Tau):
                assert t.label.cause == STAR_SET
                assert t.label.inst is STAR


def test_history_is_transparent_to_the_future():
    # an executed prefix does not guard anything, including silent steps
    t1 = run("a!b.(c!d.0 | c?(x).0)", ["a!b"])[0]
    assert "tau" in " ".join(labels(forward_transitions(t1.target)))
