"""Process terms, concrete syntax, and erasure back to plain terms.

Two term layers live here.  Plain processes (``Nil``, ``Output``,
``Input``, ``Par``, ``Res``) are ordinary pi-calculus terms whose names
carry an optional instantiator annotation.  Reversible processes add a
history: executed prefixes stay in the term as ``PastOutput`` /
``PastInput`` nodes and restrictions become ``RRes`` nodes decorated
with an extrusion memory.

Concrete grammar (whitespace-insensitive)::

    proc    := "0" | out | in | proc "|" proc | "nu" NAME "." proc | "(" proc ")"
    out     := annName "!" annName "." proc
    in      := annName "?" "(" NAME ")" "." proc
    annName := NAME [ "{" (INT | "*") "}" ]

``|`` has the lowest precedence and associates to the left.  An omitted
annotation means "no instantiator" (star).  ``parse_process`` renames
binders so they are pairwise distinct and disjoint from all free names;
every operation downstream relies on that convention instead of
per-rule alpha-conversion side conditions.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Union

if TYPE_CHECKING:
    from .memory import Memory, MemoryKind


class _Star:
    """The distinguished no-key marker, rendered ``*``."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "*"


#: Single global sentinel: "no instantiator" / "no cause yet".
STAR = _Star()

KeyOrStar = Union[int, _Star]

#: The unconstrained cause set {*}.
STAR_SET: frozenset = frozenset({STAR})

NAME_RE = re.compile(r"[a-z][a-zA-Z0-9_]*")


class Direction(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


def key_sort(k: KeyOrStar) -> int:
    """Total order on keys with star first (used only for rendering)."""
    return -1 if k is STAR else k


def render_key(k: KeyOrStar) -> str:
    return "*" if k is STAR else str(k)


def render_cause(cause: frozenset) -> str:
    return "{%s}" % ",".join(render_key(k) for k in sorted(cause, key=key_sort))


@dataclass(frozen=True)
class AnnotatedName:
    """A name occurrence together with the key that substituted it in."""

    name: str
    inst: KeyOrStar = STAR

    def __str__(self) -> str:
        if self.inst is STAR:
            return self.name
        return "%s{%d}" % (self.name, self.inst)


# --------------------------------------------------------------------------- #
# Plain processes
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Output:
    chan: AnnotatedName
    datum: AnnotatedName
    cont: "Process"


@dataclass(frozen=True)
class Input:
    chan: AnnotatedName
    binder: str
    cont: "Process"


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class Res:
    name: str
    body: "Process"


Process = Union[Nil, Output, Input, Par, Res]


# --------------------------------------------------------------------------- #
# Reversible processes
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Leaf:
    """A plain process embedded in a reversible term."""

    proc: Process


@dataclass(frozen=True)
class PastOutput:
    chan: AnnotatedName
    datum: AnnotatedName
    key: int
    cause: frozenset
    cont: "RProcess"


@dataclass(frozen=True)
class PastInput:
    chan: AnnotatedName
    binder: str
    key: int
    cause: frozenset
    cont: "RProcess"


@dataclass(frozen=True)
class RPar:
    left: "RProcess"
    right: "RProcess"


@dataclass(frozen=True)
class RRes:
    name: str
    mem: "Memory"
    body: "RProcess"


RProcess = Union[Leaf, PastOutput, PastInput, RPar, RRes]

PastPrefix = (PastOutput, PastInput)


# --------------------------------------------------------------------------- #
# Labels
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class FreeOut:
    chan: str
    datum: str


@dataclass(frozen=True)
class InAct:
    chan: str
    binder: str


@dataclass(frozen=True)
class BoundOut:
    """Scope-extruding output; carries the crossed restriction's memory."""

    chan: str
    datum: str
    mem: "Memory"


@dataclass(frozen=True)
class Tau:
    pass


Action = Union[FreeOut, InAct, BoundOut, Tau]


def act_subject(act: Action) -> str | None:
    if isinstance(act, (FreeOut, InAct, BoundOut)):
        return act.chan
    return None


def act_object(act: Action) -> str | None:
    if isinstance(act, (FreeOut, BoundOut)):
        return act.datum
    if isinstance(act, InAct):
        return act.binder
    return None


@dataclass(frozen=True)
class Label:
    key: int
    cause: frozenset
    inst: KeyOrStar
    act: Action


# Plain pi-calculus labels (image of label erasure, and the oracle LTS).

@dataclass(frozen=True)
class PiFreeOut:
    chan: str
    datum: str


@dataclass(frozen=True)
class PiIn:
    chan: str
    binder: str


@dataclass(frozen=True)
class PiBoundOut:
    chan: str
    datum: str


@dataclass(frozen=True)
class PiTau:
    pass


PiLabel = Union[PiFreeOut, PiIn, PiBoundOut, PiTau]


# --------------------------------------------------------------------------- #
# Parsing
# --------------------------------------------------------------------------- #

class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__("%s (line %d, column %d)" % (message, line, col))
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<name>[a-z][a-zA-Z0-9_]*)|(?P<int>\d+)|(?P<punct>[!?(){}.|*])"
)


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError("unexpected character %r" % text[pos], line, col)
        lexeme = m.group(0)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, lexeme, line, col))
        for ch in lexeme:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        pos = m.end()
    tokens.append(("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int, int]:
        return self.tokens[self.pos]

    def next(self) -> tuple[str, str, int, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, lexeme: str) -> None:
        kind, lex, line, col = self.next()
        if lex != lexeme:
            raise ParseError("expected %r, found %r" % (lexeme, lex or "end of input"), line, col)

    def fail(self, message: str) -> None:
        _, lex, line, col = self.peek()
        raise ParseError(message + (", found %r" % (lex or "end of input")), line, col)

    def parse(self) -> Process:
        p = self.parse_par()
        kind, lex, line, col = self.peek()
        if kind != "eof":
            raise ParseError("trailing input %r" % lex, line, col)
        return p

    def parse_par(self) -> Process:
        left = self.parse_atom()
        while self.peek()[1] == "|":
            self.next()
            left = Par(left, self.parse_atom())
        return left

    def parse_atom(self) -> Process:
        kind, lex, line, col = self.peek()
        if lex == "(":
            self.next()
            p = self.parse_par()
            self.expect(")")
            return p
        if kind == "int":
            if lex != "0":
                raise ParseError("a process cannot start with %r" % lex, line, col)
            self.next()
            return Nil()
        if kind == "name" and lex == "nu":
            self.next()
            nkind, name, nline, ncol = self.next()
            if nkind != "name":
                raise ParseError("expected a name after 'nu'", nline, ncol)
            self.expect(".")
            return Res(name, self.parse_atom())
        if kind == "name":
            chan = self.parse_ann_name()
            op = self.next()
            if op[1] == "!":
                datum = self.parse_ann_name()
                self.expect(".")
                return Output(chan, datum, self.parse_atom())
            if op[1] == "?":
                self.expect("(")
                bkind, binder, bline, bcol = self.next()
                if bkind != "name":
                    raise ParseError("expected a binder name", bline, bcol)
                self.expect(")")
                self.expect(".")
                return Input(chan, binder, self.parse_atom())
            raise ParseError("expected '!' or '?' after a channel", op[2], op[3])
        self.fail("expected a process")

    def parse_ann_name(self) -> AnnotatedName:
        kind, lex, line, col = self.next()
        if kind != "name":
            raise ParseError("expected a name", line, col)
        inst: KeyOrStar = STAR
        if self.peek()[1] == "{":
            self.next()
            akind, alex, aline, acol = self.next()
            if alex == "*":
                inst = STAR
            elif akind == "int":
                inst = int(alex)
                if inst < 1:
                    raise ParseError("keys are positive", aline, acol)
            else:
                raise ParseError("expected a key or '*'", aline, acol)
            self.expect("}")
        return AnnotatedName(lex, inst)


def _plain_free_names(p: Process) -> set[str]:
    if isinstance(p, Nil):
        return set()
    if isinstance(p, Output):
        return {p.chan.name, p.datum.name} | _plain_free_names(p.cont)
    if isinstance(p, Input):
        return {p.chan.name} | (_plain_free_names(p.cont) - {p.binder})
    if isinstance(p, Par):
        return _plain_free_names(p.left) | _plain_free_names(p.right)
    if isinstance(p, Res):
        return _plain_free_names(p.body) - {p.name}
    raise TypeError(p)


def _all_names(p: Process) -> set[str]:
    if isinstance(p, Nil):
        return set()
    if isinstance(p, Output):
        return {p.chan.name, p.datum.name} | _all_names(p.cont)
    if isinstance(p, Input):
        return {p.chan.name, p.binder} | _all_names(p.cont)
    if isinstance(p, Par):
        return _all_names(p.left) | _all_names(p.right)
    if isinstance(p, Res):
        return {p.name} | _all_names(p.body)
    raise TypeError(p)


def _fresh_variant(base: str, used: set[str]) -> str:
    n = 1
    while "%s%d" % (base, n) in used:
        n += 1
    return "%s%d" % (base, n)


def _uniquify(p: Process) -> Process:
    """Rename binders so they never collide with free names or each other."""
    used = set(_plain_free_names(p))

    def walk(q: Process, ren: dict[str, str]) -> Process:
        if isinstance(q, Nil):
            return q
        if isinstance(q, Output):
            return Output(_ren(q.chan, ren), _ren(q.datum, ren), walk(q.cont, ren))
        if isinstance(q, Input):
            binder = q.binder
            if binder in used:
                binder = _fresh_variant(q.binder, used | _all_names(p))
            used.add(binder)
            ren2 = dict(ren)
            ren2[q.binder] = binder
            return Input(_ren(q.chan, ren), binder, walk(q.cont, ren2))
        if isinstance(q, Par):
            return Par(walk(q.left, ren), walk(q.right, ren))
        if isinstance(q, Res):
            name = q.name
            if name in used:
                name = _fresh_variant(q.name, used | _all_names(p))
            used.add(name)
            ren2 = dict(ren)
            ren2[q.name] = name
            return Res(name, walk(q.body, ren2))
        raise TypeError(q)

    def _ren(a: AnnotatedName, ren: dict[str, str]) -> AnnotatedName:
        if a.name in ren:
            return AnnotatedName(ren[a.name], a.inst)
        return a

    return walk(p, {})


def parse_process(text: str) -> Process:
    """Parse a plain process; binder names are uniquified on the way in."""
    return _uniquify(_Parser(text).parse())


def binders_unique(p: Process) -> bool:
    """Check the naming convention parse_process establishes."""
    seen: set[str] = set()
    free = _plain_free_names(p)

    def walk(q: Process) -> bool:
        if isinstance(q, (Input, Res)):
            b = q.binder if isinstance(q, Input) else q.name
            if b in seen or b in free:
                return False
            seen.add(b)
            return walk(q.cont if isinstance(q, Input) else q.body)
        if isinstance(q, Output):
            return walk(q.cont)
        if isinstance(q, Par):
            return walk(q.left) and walk(q.right)
        return True

    return walk(p)


# --------------------------------------------------------------------------- #
# Rendering
# --------------------------------------------------------------------------- #

def _fmt_plain(p: Process) -> str:
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Output):
        return "%s!%s.%s" % (p.chan, p.datum, _tight_plain(p.cont))
    if isinstance(p, Input):
        return "%s?(%s).%s" % (p.chan, p.binder, _tight_plain(p.cont))
    if isinstance(p, Par):
        right = _tight_plain(p.right)
        return "%s | %s" % (_fmt_plain(p.left), right)
    if isinstance(p, Res):
        return "nu %s.%s" % (p.name, _tight_plain(p.body))
    raise TypeError(p)


def _tight_plain(p: Process) -> str:
    return "(%s)" % _fmt_plain(p) if isinstance(p, Par) else _fmt_plain(p)


def _fmt_rev(x: RProcess) -> str:
    if isinstance(x, Leaf):
        return _fmt_plain(x.proc)
    if isinstance(x, PastOutput):
        return "%s!%s[%d;%s].%s" % (
            x.chan, x.datum, x.key, render_cause(x.cause), _tight_rev(x.cont))
    if isinstance(x, PastInput):
        return "%s?(%s)[%d;%s].%s" % (
            x.chan, x.binder, x.key, render_cause(x.cause), _tight_rev(x.cont))
    if isinstance(x, RPar):
        return "%s | %s" % (_fmt_rev(x.left), _tight_rev(x.right))
    if isinstance(x, RRes):
        return "nu %s:%s.%s" % (x.name, x.mem.render(), _tight_rev(x.body))
    raise TypeError(x)


def _tight_rev(x: RProcess) -> str:
    needs = isinstance(x, RPar) or (isinstance(x, Leaf) and isinstance(x.proc, Par))
    return "(%s)" % _fmt_rev(x) if needs else _fmt_rev(x)


def _fmt_act(act: Action) -> str:
    if isinstance(act, FreeOut):
        return "%s!%s" % (act.chan, act.datum)
    if isinstance(act, InAct):
        return "%s?(%s)" % (act.chan, act.binder)
    if isinstance(act, BoundOut):
        return "%s!(nu %s:%s)" % (act.chan, act.datum, act.mem.render())
    if isinstance(act, Tau):
        return "tau"
    raise TypeError(act)


def format(term) -> str:
    """Canonical rendering of a process, reversible process, or label."""
    if isinstance(term, (Nil, Output, Input, Par, Res)):
        return _fmt_plain(term)
    if isinstance(term, (Leaf, PastOutput, PastInput, RPar, RRes)):
        return _fmt_rev(term)
    if isinstance(term, Label):
        return "(%d,%s,%s): %s" % (
            term.key, render_cause(term.cause), render_key(term.inst),
            _fmt_act(term.act))
    raise TypeError(term)


# --------------------------------------------------------------------------- #
# Embedding and erasure
# --------------------------------------------------------------------------- #

def lift(p: Process, kind: "MemoryKind") -> RProcess:
    """Embed a plain process, hoisting parallel and restriction structure.

    Restrictions receive a fresh memory of the configured kind; prefixes
    stay inside a Leaf until they fire.
    """
    from .memory import mem_new

    if isinstance(p, Par):
        return RPar(lift(p.left, kind), lift(p.right, kind))
    if isinstance(p, Res):
        return RRes(p.name, mem_new(kind), lift(p.body, kind))
    return Leaf(p)


def initial(p: Process, kind: "MemoryKind") -> RProcess:
    """The reversible process a run starts from: no history, empty memories."""
    return lift(strip_insts(p), kind)


def as_plain(x: RProcess) -> Process:
    """Inverse of ``lift`` on history-free terms.

    Only defined when the term contains no past prefixes and all its
    memories are empty; the backward base rules rely on it.
    """
    if isinstance(x, Leaf):
        return x.proc
    if isinstance(x, RPar):
        return Par(as_plain(x.left), as_plain(x.right))
    if isinstance(x, RRes):
        if not x.mem.is_empty():
            raise ValueError("cannot flatten a restriction with history: %s" % format(x))
        return Res(x.name, as_plain(x.body))
    raise ValueError("cannot flatten a term with history: %s" % format(x))


def strip_insts(p: Process) -> Process:
    if isinstance(p, Nil):
        return p
    if isinstance(p, Output):
        return Output(AnnotatedName(p.chan.name), AnnotatedName(p.datum.name),
                      strip_insts(p.cont))
    if isinstance(p, Input):
        return Input(AnnotatedName(p.chan.name), p.binder, strip_insts(p.cont))
    if isinstance(p, Par):
        return Par(strip_insts(p.left), strip_insts(p.right))
    if isinstance(p, Res):
        return Res(p.name, strip_insts(p.body))
    raise TypeError(p)


def erase(x: RProcess) -> Process:
    """Forget the history: drop past prefixes, drop non-empty restrictions,
    keep empty restrictions, strip every instantiator."""
    if isinstance(x, Leaf):
        return strip_insts(x.proc)
    if isinstance(x, PastPrefix):
        return erase(x.cont)
    if isinstance(x, RPar):
        return Par(erase(x.left), erase(x.right))
    if isinstance(x, RRes):
        if x.mem.is_empty():
            return Res(x.name, erase(x.body))
        return erase(x.body)
    raise TypeError(x)


def erase_label(label: Label) -> PiLabel:
    """Map an engine label onto a plain pi-calculus label.

    A bound output whose memory already records extruders erases to a
    free output: the erased process has lost that restriction.
    """
    act = label.act
    if isinstance(act, FreeOut):
        return PiFreeOut(act.chan, act.datum)
    if isinstance(act, InAct):
        return PiIn(act.chan, act.binder)
    if isinstance(act, BoundOut):
        if act.mem.is_empty():
            return PiBoundOut(act.chan, act.datum)
        return PiFreeOut(act.chan, act.datum)
    if isinstance(act, Tau):
        return PiTau()
    raise TypeError(act)


# --------------------------------------------------------------------------- #
# Keys and names
# --------------------------------------------------------------------------- #

def keys(x: RProcess) -> frozenset:
    """Keys of the executed prefixes in a term."""
    if isinstance(x, Leaf):
        return frozenset()
    if isinstance(x, PastPrefix):
        return frozenset({x.key}) | keys(x.cont)
    if isinstance(x, RPar):
        return keys(x.left) | keys(x.right)
    if isinstance(x, RRes):
        return keys(x.body)
    raise TypeError(x)


def fresh(i: int, x: RProcess) -> bool:
    return i not in keys(x)


def fresh_key(x: RProcess) -> int:
    """Canonical fresh key: the smallest unused positive integer."""
    used = keys(x)
    i = 1
    while i in used:
        i += 1
    return i


def _proc_occurring(p: Process) -> set[int]:
    if isinstance(p, Nil):
        return set()
    if isinstance(p, Output):
        out = set()
        if p.chan.inst is not STAR:
            out.add(p.chan.inst)
        if p.datum.inst is not STAR:
            out.add(p.datum.inst)
        return out | _proc_occurring(p.cont)
    if isinstance(p, Input):
        out = set()
        if p.chan.inst is not STAR:
            out.add(p.chan.inst)
        return out | _proc_occurring(p.cont)
    if isinstance(p, Par):
        return _proc_occurring(p.left) | _proc_occurring(p.right)
    if isinstance(p, Res):
        return _proc_occurring(p.body)
    raise TypeError(p)


def occurring_keys(x: RProcess) -> set[int]:
    """Every key mentioned anywhere: prefix keys, causes, instantiators,
    and memory contents.

    This is the "occurs in" check of the parallel rules.  It is strictly
    wider than ``keys``: an extrusion may not be undone while some other
    component still cites it as a cause.
    """
    if isinstance(x, Leaf):
        return _proc_occurring(x.proc)
    if isinstance(x, PastPrefix):
        out = {x.key}
        out |= {k for k in x.cause if k is not STAR}
        if x.chan.inst is not STAR:
            out.add(x.chan.inst)
        if isinstance(x, PastOutput) and x.datum.inst is not STAR:
            out.add(x.datum.inst)
        return out | occurring_keys(x.cont)
    if isinstance(x, RPar):
        return occurring_keys(x.left) | occurring_keys(x.right)
    if isinstance(x, RRes):
        return x.mem.mentioned_keys() | occurring_keys(x.body)
    raise TypeError(x)


def free_names(t) -> set[str]:
    """Free names of a plain or reversible term.

    A restriction binds its name only while its memory is empty; once a
    name has been extruded the restriction is a mere decoration.
    """
    if isinstance(t, (Nil, Output, Input, Par, Res)):
        return _plain_free_names(t)
    if isinstance(t, Leaf):
        return _plain_free_names(t.proc)
    if isinstance(t, PastOutput):
        return {t.chan.name, t.datum.name} | free_names(t.cont)
    if isinstance(t, PastInput):
        return {t.chan.name} | (free_names(t.cont) - {t.binder})
    if isinstance(t, RPar):
        return free_names(t.left) | free_names(t.right)
    if isinstance(t, RRes):
        body = free_names(t.body)
        return body - {t.name} if t.mem.is_empty() else body
    raise TypeError(t)


# --------------------------------------------------------------------------- #
# Substitution
# --------------------------------------------------------------------------- #

def _subst_ann(a: AnnotatedName, var: str, val: str, key: int) -> AnnotatedName:
    return AnnotatedName(val, key) if a.name == var else a


def _subst_plain_ann(p: Process, var: str, val: str, key: int) -> Process:
    if isinstance(p, Nil):
        return p
    if isinstance(p, Output):
        return Output(_subst_ann(p.chan, var, val, key),
                      _subst_ann(p.datum, var, val, key),
                      _subst_plain_ann(p.cont, var, val, key))
    if isinstance(p, Input):
        return Input(_subst_ann(p.chan, var, val, key), p.binder,
                     _subst_plain_ann(p.cont, var, val, key))
    if isinstance(p, Par):
        return Par(_subst_plain_ann(p.left, var, val, key),
                   _subst_plain_ann(p.right, var, val, key))
    if isinstance(p, Res):
        return Res(p.name, _subst_plain_ann(p.body, var, val, key))
    raise TypeError(p)


def substitute(x: RProcess, var: str, val: str, key: int) -> RProcess:
    """Replace every occurrence of ``var`` by ``val`` keyed by the
    communication that performed the substitution.

    Binder uniqueness guarantees ``var`` occurs only free, so this is a
    blind structural replacement, past prefixes included.
    """
    if isinstance(x, Leaf):
        return Leaf(_subst_plain_ann(x.proc, var, val, key))
    if isinstance(x, PastOutput):
        return PastOutput(_subst_ann(x.chan, var, val, key),
                          _subst_ann(x.datum, var, val, key),
                          x.key, x.cause, substitute(x.cont, var, val, key))
    if isinstance(x, PastInput):
        return PastInput(_subst_ann(x.chan, var, val, key), x.binder,
                         x.key, x.cause, substitute(x.cont, var, val, key))
    if isinstance(x, RPar):
        return RPar(substitute(x.left, var, val, key),
                    substitute(x.right, var, val, key))
    if isinstance(x, RRes):
        return RRes(x.name, x.mem, substitute(x.body, var, val, key))
    raise TypeError(x)


def unsubstitute(x: RProcess, val: str, key: int, var: str) -> RProcess:
    """Inverse of ``substitute``: restore the variable.

    Sound because a (name, key) annotation pair is introduced by exactly
    one communication, so every such occurrence came from that event.
    """

    def un_ann(a: AnnotatedName) -> AnnotatedName:
        if a.name == val and a.inst == key:
            return AnnotatedName(var)
        return a

    def un_plain(p: Process) -> Process:
        if isinstance(p, Nil):
            return p
        if isinstance(p, Output):
            return Output(un_ann(p.chan), un_ann(p.datum), un_plain(p.cont))
        if isinstance(p, Input):
            return Input(un_ann(p.chan), p.binder, un_plain(p.cont))
        if isinstance(p, Par):
            return Par(un_plain(p.left), un_plain(p.right))
        if isinstance(p, Res):
            return Res(p.name, un_plain(p.body))
        raise TypeError(p)

    if isinstance(x, Leaf):
        return Leaf(un_plain(x.proc))
    if isinstance(x, PastOutput):
        return PastOutput(un_ann(x.chan), un_ann(x.datum), x.key, x.cause,
                          unsubstitute(x.cont, val, key, var))
    if isinstance(x, PastInput):
        return PastInput(un_ann(x.chan), x.binder, x.key, x.cause,
                         unsubstitute(x.cont, val, key, var))
    if isinstance(x, RPar):
        return RPar(unsubstitute(x.left, val, key, var),
                    unsubstitute(x.right, val, key, var))
    if isinstance(x, RRes):
        return RRes(x.name, x.mem, unsubstitute(x.body, val, key, var))
    raise TypeError(x)


# --------------------------------------------------------------------------- #
# Positions
# --------------------------------------------------------------------------- #

def find_prefix_paths(x: RProcess, key: int) -> list[tuple[str, ...]]:
    """Paths (sequences of child selectors) to past prefixes with a key.

    A visible key has one occurrence; a communication key has one on each
    side of some parallel composition.
    """
    found: list[tuple[str, ...]] = []

    def walk(t: RProcess, path: tuple[str, ...]) -> None:
        if isinstance(t, PastPrefix):
            if t.key == key:
                found.append(path)
            walk(t.cont, path + ("cont",))
        elif isinstance(t, RPar):
            walk(t.left, path + ("left",))
            walk(t.right, path + ("right",))
        elif isinstance(t, RRes):
            walk(t.body, path + ("body",))

    walk(x, ())
    return found


def resolve_path(x: RProcess, path: tuple[str, ...]) -> RProcess:
    for sel in path:
        x = getattr(x, sel)
    return x


def past_prefixes(x: RProcess) -> list:
    """All past prefixes in traversal order."""
    out = []

    def walk(t: RProcess) -> None:
        if isinstance(t, PastPrefix):
            out.append(t)
            walk(t.cont)
        elif isinstance(t, RPar):
            walk(t.left)
            walk(t.right)
        elif isinstance(t, RRes):
            walk(t.body)

    walk(x)
    return out


def check_key_invariant(x: RProcess) -> None:
    """Keys are unique, except that a communication key marks exactly one
    past output and one past input on opposite sides of a parallel."""
    by_key: dict[int, list] = {}
    for pref in past_prefixes(x):
        by_key.setdefault(pref.key, []).append(pref)
    for key, prefs in by_key.items():
        if len(prefs) == 1:
            continue
        if len(prefs) != 2:
            raise AssertionError("key %d occurs %d times" % (key, len(prefs)))
        kinds = {type(p) for p in prefs}
        if kinds != {PastOutput, PastInput}:
            raise AssertionError("key %d is not an output/input pair" % key)
        paths = find_prefix_paths(x, key)
        shared = 0
        while paths[0][:shared + 1] == paths[1][:shared + 1]:
            shared += 1
        joint = resolve_path(x, paths[0][:shared])
        if not isinstance(joint, RPar):
            raise AssertionError("key %d pair does not straddle a parallel" % key)
