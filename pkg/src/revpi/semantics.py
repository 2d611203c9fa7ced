"""The labelled transition system: exhaustive forward and backward steps.

Forward rules fire unexecuted prefixes (stamping them with a fresh key),
let actions cross parallels and restrictions, pair complementary actions
into communications, and -- at a restriction -- either extrude the name
(turning the label into a bound output and recording the key in the
memory) or refine the action's contextual cause when its subject is an
already-extruded name.

Backward rules are the exact mirrors: a past prefix whose continuation
is history-free rolls back, communications undo both halves at once, and
an undo is blocked while any parallel component still mentions its key
(as a prefix key, a cause, an instantiator, or inside a memory).  That
occurs-check is what makes reversal causally consistent.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from . import memory as mem
from . import syntax
from .memory import Memory, MemoryKind
from .syntax import (
    STAR, STAR_SET, BoundOut, Direction, FreeOut, InAct, Input, Label,
    Leaf, Output, PastInput, PastOutput, PastPrefix, RPar, RProcess, RRes,
    Tau, act_object, act_subject,
)


class NoSuchTransitionError(ValueError):
    pass


@dataclass(frozen=True)
class Transition:
    source: RProcess
    dir: Direction
    label: Label
    target: RProcess

    def __str__(self) -> str:
        arrow = "-->" if self.dir is Direction.FORWARD else "~~>"
        return "%s  %s %s  %s" % (
            syntax.format(self.source), arrow, syntax.format(self.label),
            syntax.format(self.target))


def label_sort_key(label: Label):
    act = label.act
    return (
        label.key,
        type(act).__name__,
        act_subject(act) or "",
        act_object(act) or "",
        tuple(syntax.render_key(k) for k in sorted(label.cause, key=syntax.key_sort)),
        syntax.render_key(label.inst),
    )


def _sorted_transitions(trs: list[Transition]) -> tuple[Transition, ...]:
    seen = set()
    out = []
    for t in trs:
        if t not in seen:
            seen.add(t)
            out.append(t)
    out.sort(key=lambda t: (label_sort_key(t.label), syntax.format(t.target)))
    return tuple(out)


def infer_kind(x: RProcess) -> MemoryKind:
    """Memory kind of the first restriction found; rpi when there is none."""
    return _maybe_kind(x) or MemoryKind.RPI


def _maybe_kind(x: RProcess) -> MemoryKind | None:
    if isinstance(x, RRes):
        return x.mem.kind
    if isinstance(x, PastPrefix):
        return _maybe_kind(x.cont)
    if isinstance(x, RPar):
        return _maybe_kind(x.left) or _maybe_kind(x.right)
    return None


# --------------------------------------------------------------------------- #
# Contextual cause update
# --------------------------------------------------------------------------- #

def cause_update(x: RProcess, i: int, new_cause: frozenset) -> RProcess:
    """Rewrite the stored cause of the past prefix keyed ``i``.

    The full term is searched (the acting prefix may sit below other
    history); terms without such a prefix come back unchanged.
    """
    if isinstance(x, Leaf):
        return x
    if isinstance(x, PastPrefix):
        if x.key == i:
            return dataclasses.replace(x, cause=new_cause)
        return dataclasses.replace(x, cont=cause_update(x.cont, i, new_cause))
    if isinstance(x, RPar):
        return RPar(cause_update(x.left, i, new_cause),
                    cause_update(x.right, i, new_cause))
    if isinstance(x, RRes):
        return RRes(x.name, x.mem, cause_update(x.body, i, new_cause))
    raise TypeError(x)


def _cause_joinable(k: frozenset, j) -> bool:
    # the communication side condition: either side unconstrained, or the
    # instantiator of one subject is among the other's causes
    return STAR in k or j is STAR or j in k


# --------------------------------------------------------------------------- #
# Forward transitions
# --------------------------------------------------------------------------- #

def forward_transitions(x: RProcess, kind: MemoryKind | None = None,
                        key: int | None = None) -> tuple[Transition, ...]:
    """All forward transitions of ``x``.

    ``kind`` configures the memories created when restrictions below a
    firing prefix enter the reversible layer; by default it is read off
    the term.  ``key`` overrides the canonical fresh key (the smallest
    unused positive integer) -- commuting transitions in a square needs
    the key of the step being replayed.
    """
    if kind is None:
        kind = infer_kind(x)
    if key is None:
        key = syntax.fresh_key(x)
    elif key in syntax.keys(x):
        raise ValueError("key %d is not fresh" % key)
    steps = _forward(x, key, kind)
    return _sorted_transitions(
        [Transition(x, Direction.FORWARD, lbl, tgt) for lbl, tgt in steps])


def _forward(x: RProcess, key: int, kind: MemoryKind) -> list[tuple[Label, RProcess]]:
    if isinstance(x, Leaf):
        p = x.proc
        if isinstance(p, Output):
            lbl = Label(key, STAR_SET, p.chan.inst, FreeOut(p.chan.name, p.datum.name))
            tgt = PastOutput(p.chan, p.datum, key, STAR_SET, syntax.lift(p.cont, kind))
            return [(lbl, tgt)]
        if isinstance(p, Input):
            lbl = Label(key, STAR_SET, p.chan.inst, InAct(p.chan.name, p.binder))
            tgt = PastInput(p.chan, p.binder, key, STAR_SET, syntax.lift(p.cont, kind))
            return [(lbl, tgt)]
        return []

    if isinstance(x, PastPrefix):
        # history congruence: executed prefixes never block the future
        return [(lbl, dataclasses.replace(x, cont=tgt))
                for lbl, tgt in _forward(x.cont, key, kind)]

    if isinstance(x, RPar):
        lefts = _forward(x.left, key, kind)
        rights = _forward(x.right, key, kind)
        out = []
        for lbl, tgt in lefts:
            if lbl.key not in syntax.occurring_keys(x.right):
                out.append((lbl, RPar(tgt, x.right)))
        for lbl, tgt in rights:
            if lbl.key not in syntax.occurring_keys(x.left):
                out.append((lbl, RPar(x.left, tgt)))
        out.extend(_sync(lefts, rights, out_on_left=True))
        out.extend(_sync(rights, lefts, out_on_left=False))
        return out

    if isinstance(x, RRes):
        out = []
        for lbl, tgt in _forward(x.body, key, kind):
            out.extend(_cross_restriction(x, lbl, tgt))
        return out

    raise TypeError(x)


def _sync(outs, ins, out_on_left: bool) -> list[tuple[Label, RProcess]]:
    """Pair an output premise with an input premise into a silent step."""
    result = []
    for lo, to in outs:
        if not isinstance(lo.act, (FreeOut, BoundOut)):
            continue
        for li, ti in ins:
            if not isinstance(li.act, InAct) or li.act.chan != lo.act.chan:
                continue
            if not (_cause_joinable(lo.cause, li.inst)
                    and _cause_joinable(li.cause, lo.inst)):
                continue
            key = lo.key
            ti_sub = syntax.substitute(ti, li.act.binder, lo.act.datum, key)
            tau = Label(key, STAR_SET, STAR, Tau())
            if isinstance(lo.act, FreeOut):
                pair = RPar(to, ti_sub) if out_on_left else RPar(ti_sub, to)
                result.append((tau, pair))
            else:
                stripped = mem.strip_key(to, key)
                pair = RPar(stripped, ti_sub) if out_on_left else RPar(ti_sub, stripped)
                result.append((tau, RRes(lo.act.datum, lo.act.mem, pair)))
    return result


def _cross_restriction(res: RRes, lbl: Label, tgt: RProcess) -> list[tuple[Label, RProcess]]:
    a, m = res.name, res.mem
    act = lbl.act
    if isinstance(act, Tau):
        return [(lbl, RRes(a, m, tgt))]
    subj = act_subject(act)
    if isinstance(act, (FreeOut, BoundOut)) and act.datum == a and subj != a:
        # extrusion: the label turns into a bound output carrying the
        # memory as it was before this key was recorded
        new_cause = mem.open_cause(m.kind, m, lbl.cause)
        new_lbl = Label(lbl.key, new_cause, lbl.inst, BoundOut(subj, a, m))
        body = cause_update(tgt, lbl.key, new_cause)
        return [(new_lbl, RRes(a, mem.mem_add(m, lbl.key), body))]
    if subj == a:
        if m.is_empty():
            return []  # the name is still private: nothing may use it
        out = []
        for k2 in mem.admissible_causes(m.kind, m, lbl.cause, res.body):
            new_lbl = Label(lbl.key, k2, lbl.inst, act)
            out.append((new_lbl, RRes(a, m, cause_update(tgt, lbl.key, k2))))
        return out
    return [(lbl, RRes(a, m, tgt))]


# --------------------------------------------------------------------------- #
# Backward transitions
# --------------------------------------------------------------------------- #

def backward_transitions(x: RProcess) -> tuple[Transition, ...]:
    """All backward transitions of ``x`` (labels mirror the forward ones)."""
    steps = _backward(x)
    return _sorted_transitions(
        [Transition(x, Direction.BACKWARD, lbl, tgt) for lbl, tgt in steps])


def _backward(x: RProcess) -> list[tuple[Label, RProcess]]:
    if isinstance(x, Leaf):
        return []

    if isinstance(x, PastOutput):
        if not syntax.keys(x.cont):
            lbl = Label(x.key, x.cause, x.chan.inst, FreeOut(x.chan.name, x.datum.name))
            tgt = Leaf(Output(x.chan, x.datum, syntax.as_plain(x.cont)))
            return [(lbl, tgt)]
        return [(lbl, dataclasses.replace(x, cont=tgt))
                for lbl, tgt in _backward(x.cont)]

    if isinstance(x, PastInput):
        if not syntax.keys(x.cont):
            lbl = Label(x.key, x.cause, x.chan.inst, InAct(x.chan.name, x.binder))
            tgt = Leaf(Input(x.chan, x.binder, syntax.as_plain(x.cont)))
            return [(lbl, tgt)]
        return [(lbl, dataclasses.replace(x, cont=tgt))
                for lbl, tgt in _backward(x.cont)]

    if isinstance(x, RPar):
        out = []
        for lbl, tgt in _backward(x.left):
            if lbl.key not in syntax.occurring_keys(x.right):
                out.append((lbl, RPar(tgt, x.right)))
        for lbl, tgt in _backward(x.right):
            if lbl.key not in syntax.occurring_keys(x.left):
                out.append((lbl, RPar(x.left, tgt)))
        out.extend(_unsync(x.left, x.right, out_on_left=True))
        out.extend(_unsync(x.right, x.left, out_on_left=False))
        return out

    if isinstance(x, RRes):
        out = []
        if isinstance(x.body, RPar):
            out.extend(_unclose(x, x.body.left, x.body.right, out_on_left=True))
            out.extend(_unclose(x, x.body.right, x.body.left, out_on_left=False))
        for lbl, tgt in _backward(x.body):
            out.extend(_cross_restriction_back(x, lbl, tgt))
        return out

    raise TypeError(x)


def _tau_keys(out_side: RProcess, in_side: RProcess) -> list[tuple[int, PastOutput, PastInput]]:
    outs = {p.key: p for p in syntax.past_prefixes(out_side) if isinstance(p, PastOutput)}
    ins = {p.key: p for p in syntax.past_prefixes(in_side) if isinstance(p, PastInput)}
    return [(k, outs[k], ins[k]) for k in sorted(outs.keys() & ins.keys())]


def _unsync(out_side: RProcess, in_side: RProcess,
            out_on_left: bool) -> list[tuple[Label, RProcess]]:
    """Undo a plain communication: both halves roll back together and the
    substitution is reverted on the input side."""
    result = []
    for key, out_pref, in_pref in _tau_keys(out_side, in_side):
        datum = out_pref.datum.name
        restored = syntax.unsubstitute(in_side, datum, key, in_pref.binder)
        out_steps = [(l, t) for l, t in _backward(out_side)
                     if l.key == key and isinstance(l.act, FreeOut)]
        in_steps = [(l, t) for l, t in _backward(restored)
                    if l.key == key and isinstance(l.act, InAct)]
        for lo, to in out_steps:
            for li, ti in in_steps:
                if li.act.chan != lo.act.chan:
                    continue
                if not (_cause_joinable(lo.cause, li.inst)
                        and _cause_joinable(li.cause, lo.inst)):
                    continue
                tau = Label(key, STAR_SET, STAR, Tau())
                pair = RPar(to, ti) if out_on_left else RPar(ti, to)
                result.append((tau, pair))
    return result


def _unclose(res: RRes, out_side: RProcess, in_side: RProcess,
             out_on_left: bool) -> list[tuple[Label, RProcess]]:
    """Undo a scope-closing communication at the restriction it created.

    The output side gets its stripped memory indices restored before the
    bound-output premise is replayed; the enclosing restriction vanishes.
    """
    result = []
    for key, out_pref, in_pref in _tau_keys(out_side, in_side):
        if out_pref.datum.name != res.name:
            continue
        restored_out = mem.unstrip_key(out_side, key)
        restored_in = syntax.unsubstitute(in_side, res.name, key, in_pref.binder)
        out_steps = [(l, t) for l, t in _backward(restored_out)
                     if l.key == key and isinstance(l.act, BoundOut)
                     and l.act.datum == res.name and l.act.mem == res.mem]
        in_steps = [(l, t) for l, t in _backward(restored_in)
                    if l.key == key and isinstance(l.act, InAct)]
        for lo, to in out_steps:
            for li, ti in in_steps:
                if li.act.chan != lo.act.chan:
                    continue
                if not (_cause_joinable(lo.cause, li.inst)
                        and _cause_joinable(li.cause, lo.inst)):
                    continue
                tau = Label(key, STAR_SET, STAR, Tau())
                pair = RPar(to, ti) if out_on_left else RPar(ti, to)
                result.append((tau, pair))
    return result


def _open_cause_consistent(m: Memory, cause: frozenset) -> bool:
    # the stored cause must still be producible by the cause update this
    # crossing would apply when replayed; otherwise the memory has moved
    # on (a later extrusion re-indexed it) and the undo must wait
    if m.kind is MemoryKind.BSC:
        return m.index is STAR or m.index in cause
    return True


def _refine_cause_consistent(m: Memory, cause: frozenset) -> bool:
    if m.kind is MemoryKind.BSC:
        return m.index is STAR or m.index in cause
    if m.kind is MemoryKind.DCC:
        return m.index <= cause
    return True


def _cross_restriction_back(res: RRes, lbl: Label, tgt: RProcess) -> list[tuple[Label, RProcess]]:
    a, m = res.name, res.mem
    act = lbl.act
    if isinstance(act, Tau):
        return [(lbl, RRes(a, m, tgt))]
    subj = act_subject(act)
    if isinstance(act, (FreeOut, BoundOut)) and act.datum == a and subj != a:
        # undo the extrusion recorded for this key
        if not mem.mem_contains(m, lbl.key):
            return []
        m2 = mem.mem_remove_extruder(m, lbl.key)
        if not _open_cause_consistent(m2, lbl.cause):
            return []
        new_lbl = Label(lbl.key, lbl.cause, lbl.inst, BoundOut(subj, a, m2))
        return [(new_lbl, RRes(a, m2, tgt))]
    if subj == a:
        if m.is_empty() or not _refine_cause_consistent(m, lbl.cause):
            return []
        return [(lbl, RRes(a, m, tgt))]
    return [(lbl, RRes(a, m, tgt))]


# --------------------------------------------------------------------------- #
# Step selection
# --------------------------------------------------------------------------- #

def all_transitions(x: RProcess, kind: MemoryKind | None = None) -> tuple[Transition, ...]:
    return forward_transitions(x, kind) + backward_transitions(x)


def step(x: RProcess, label: Label, direction: Direction,
         kind: MemoryKind | None = None) -> RProcess:
    """Target of the unique transition with this label and direction."""
    if direction is Direction.FORWARD:
        candidates = forward_transitions(x, kind, key=label.key)
    else:
        candidates = backward_transitions(x)
    hits = [t for t in candidates if t.label == label]
    if not hits:
        near = [t for t in candidates if t.label.key == label.key]
        detail = ""
        if near:
            detail = "; nearest by key: %s" % ", ".join(
                syntax.format(t.label) for t in near)
        raise NoSuchTransitionError(
            "no %s transition labelled %s%s" % (
                direction.value, syntax.format(label), detail))
    targets = {t.target for t in hits}
    if len(targets) > 1:
        raise NoSuchTransitionError(
            "label %s is ambiguous here (%d targets)" % (
                syntax.format(label), len(targets)))
    return hits[0].target
