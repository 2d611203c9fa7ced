"""Extrusion memories and the cause-selection predicates.

Every restriction carries a memory recording which actions extruded its
name.  Three interchangeable shapes are supported:

* ``rpi`` -- a bare key set; any recorded extruder can serve as the
  contextual cause of a later action on the name.
* ``bsc`` -- a key set indexed by the first extruder; that one key is
  forced into every later cause set.
* ``dcc`` -- a key set indexed by the set of extruders still visible;
  the whole index set becomes the cause.

The shape is a per-run configuration: all restrictions in one term use
the same kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import syntax
from .syntax import (
    STAR, STAR_SET, Leaf, PastInput, PastOutput, PastPrefix, RPar, RProcess,
    RRes, render_key, key_sort,
)


class MemoryKind(Enum):
    RPI = "rpi"
    BSC = "bsc"
    DCC = "dcc"


class DuplicateKeyError(ValueError):
    """Adding a key that is already recorded: an engine bug, not user error."""


@dataclass(frozen=True)
class Memory:
    kind: MemoryKind
    gamma: frozenset = frozenset()
    index: object = None  # bsc: key or star; dcc: frozenset; rpi: None

    def __post_init__(self):
        if self.kind is MemoryKind.RPI:
            assert self.index is None
        elif self.kind is MemoryKind.BSC:
            assert self.index is STAR or isinstance(self.index, int)
        else:
            assert isinstance(self.index, frozenset) and STAR in self.index

    def is_empty(self) -> bool:
        if self.kind is MemoryKind.RPI:
            return not self.gamma
        if self.kind is MemoryKind.BSC:
            return not self.gamma and self.index is STAR
        return not self.gamma and self.index == STAR_SET

    def mentioned_keys(self) -> set[int]:
        out = set(self.gamma)
        if self.kind is MemoryKind.BSC and self.index is not STAR:
            out.add(self.index)
        if self.kind is MemoryKind.DCC:
            out |= {k for k in self.index if k is not STAR}
        return out

    def render(self) -> str:
        inner = ",".join(str(k) for k in sorted(self.gamma))
        if self.kind is MemoryKind.RPI:
            return "set{%s}" % inner
        if self.kind is MemoryKind.BSC:
            return "iset{%s}@%s" % (inner, render_key(self.index))
        omega = ",".join(render_key(k) for k in sorted(self.index, key=key_sort))
        return "sset{%s}@{%s}" % (inner, omega)


def mem_new(kind: MemoryKind) -> Memory:
    if kind is MemoryKind.RPI:
        return Memory(kind)
    if kind is MemoryKind.BSC:
        return Memory(kind, index=STAR)
    return Memory(kind, index=STAR_SET)


def mem_empty(m: Memory) -> bool:
    return m.is_empty()


def mem_contains(m: Memory, i: int) -> bool:
    return i in m.gamma


def mem_add(m: Memory, i: int) -> Memory:
    """Record extruder ``i``; for bsc the first extruder becomes the index."""
    if i in m.gamma:
        raise DuplicateKeyError("key %d is already recorded in %s" % (i, m.render()))
    gamma = m.gamma | {i}
    if m.kind is MemoryKind.RPI:
        return Memory(m.kind, gamma)
    if m.kind is MemoryKind.BSC:
        return Memory(m.kind, gamma, i if m.index is STAR else m.index)
    return Memory(m.kind, gamma, m.index | {i})


def mem_remove_extruder(m: Memory, i: int) -> Memory:
    """Undo ``mem_add``; only meaningful right after the extrusion of ``i``."""
    gamma = m.gamma - {i}
    if m.kind is MemoryKind.RPI:
        return Memory(m.kind, gamma)
    if m.kind is MemoryKind.BSC:
        return Memory(m.kind, gamma, STAR if m.index == i else m.index)
    return Memory(m.kind, gamma, m.index - {i})


def _mem_strip(m: Memory, i: int) -> Memory:
    if m.kind is MemoryKind.RPI:
        return m
    if m.kind is MemoryKind.BSC:
        return Memory(m.kind, m.gamma, STAR) if m.index == i else m
    return Memory(m.kind, m.gamma, m.index - {i})


def _mem_unstrip(m: Memory, i: int) -> Memory:
    # Inverse of _mem_strip on states produced by a communication: the
    # stripped index can only have been i itself (a fresh key is never
    # the index of an uninvolved restriction).
    if not mem_contains(m, i):
        return m
    if m.kind is MemoryKind.BSC and m.index is STAR:
        return Memory(m.kind, m.gamma, i)
    if m.kind is MemoryKind.DCC:
        return Memory(m.kind, m.gamma, m.index | {i})
    return m


def strip_key(x: RProcess, i: int) -> RProcess:
    """Remove key ``i`` from every memory index in the term.

    Used when a scope-extruding communication closes over the context:
    the closing key stops being an observable extruder.
    """
    if isinstance(x, Leaf):
        return x
    if isinstance(x, PastOutput):
        return PastOutput(x.chan, x.datum, x.key, x.cause, strip_key(x.cont, i))
    if isinstance(x, PastInput):
        return PastInput(x.chan, x.binder, x.key, x.cause, strip_key(x.cont, i))
    if isinstance(x, RPar):
        return RPar(strip_key(x.left, i), strip_key(x.right, i))
    if isinstance(x, RRes):
        return RRes(x.name, _mem_strip(x.mem, i), strip_key(x.body, i))
    raise TypeError(x)


def unstrip_key(x: RProcess, i: int) -> RProcess:
    """Inverse of ``strip_key`` for undoing a close: every restriction that
    records ``i`` as extruder had its index restored from ``i``."""
    if isinstance(x, Leaf):
        return x
    if isinstance(x, PastOutput):
        return PastOutput(x.chan, x.datum, x.key, x.cause, unstrip_key(x.cont, i))
    if isinstance(x, PastInput):
        return PastInput(x.chan, x.binder, x.key, x.cause, unstrip_key(x.cont, i))
    if isinstance(x, RPar):
        return RPar(unstrip_key(x.left, i), unstrip_key(x.right, i))
    if isinstance(x, RRes):
        return RRes(x.name, _mem_unstrip(x.mem, i), unstrip_key(x.body, i))
    raise TypeError(x)


def instantiation_related(x: RProcess, i1: int, i2: int) -> bool:
    """True when the action keyed ``i2`` runs on a channel that the input
    keyed ``i1`` received: the substitution of ``i1`` instantiated it."""

    def under(t: RProcess) -> bool:
        # looks for a past prefix keyed i2 whose channel instantiator is i1
        for pref in syntax.past_prefixes(t):
            if pref.key == i2 and pref.chan.inst == i1:
                return True
        return False

    def walk(t: RProcess) -> bool:
        if isinstance(t, PastPrefix):
            if isinstance(t, PastInput) and t.key == i1 and under(t.cont):
                return True
            return walk(t.cont)
        if isinstance(t, RPar):
            return walk(t.left) or walk(t.right)
        if isinstance(t, RRes):
            return walk(t.body)
        return False

    return walk(x)


def admissible_causes(kind: MemoryKind, m: Memory, k: frozenset,
                      host: RProcess) -> list[frozenset]:
    """Cause sets an action may adopt when its subject crosses a non-empty
    restriction.

    rpi offers a choice: a still-unconstrained action must pick one
    recorded extruder; a constrained one may keep its cause or move to an
    extruder that its current cause instantiated.  bsc and dcc are
    deterministic: union in the index.
    """
    if m.is_empty():
        raise ValueError("cause selection requires a non-empty memory")
    if kind is MemoryKind.BSC:
        return [k | {m.index}]
    if kind is MemoryKind.DCC:
        return [k | m.index]
    if k == STAR_SET:
        return [frozenset({g}) for g in sorted(m.gamma)]
    out = [k]
    (current,) = [c for c in k if c is not STAR] or [None]
    if current is not None:
        for g in sorted(m.gamma):
            if instantiation_related(host, current, g):
                cand = frozenset({g})
                if cand not in out:
                    out.append(cand)
    return out


def open_cause(kind: MemoryKind, m: Memory, k: frozenset) -> frozenset:
    """Cause update applied when a name is extruded across its restriction."""
    if kind is MemoryKind.BSC:
        return k | {m.index}
    return k
