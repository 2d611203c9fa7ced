"""Command line front end.

``revpi enumerate`` prints a bounded fragment of the transition system,
``revpi step`` runs an interactive forward/backward stepper, ``revpi
check`` runs one of the property suites, and ``revpi export`` writes the
enumeration to a file.  Exit codes: 0 ok, 1 parse error, 2 I/O or usage
error, 3 property violations found.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import deque
from pathlib import Path

from . import checks, corpus, correspondence, semantics, syntax, traces
from .memory import MemoryKind
from .semantics import Transition
from .syntax import Direction, ParseError, Process

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_IO = 2
EXIT_VIOLATION = 3


def _read_term(args) -> Process:
    if args.input:
        try:
            return corpus.load_corpus_file(args.input)
        except OSError as exc:
            raise _IOFailure(str(exc))
    if args.term is None:
        raise _IOFailure("no term given: pass one inline or via --input")
    return syntax.parse_process(corpus.strip_comments(args.term))


class _IOFailure(Exception):
    pass


def _kind(args) -> MemoryKind:
    return MemoryKind(args.semantics)


# --------------------------------------------------------------------------- #
# enumerate / export
# --------------------------------------------------------------------------- #

def _explore(p: Process, kind: MemoryKind, depth: int):
    start = syntax.initial(p, kind)
    index = {start: 0}
    order = [start]
    transitions: list[tuple[int, int, Transition]] = []
    frontier = deque([(start, 0)])
    while frontier:
        x, d = frontier.popleft()
        if d >= depth:
            continue
        for t in semantics.all_transitions(x, kind):
            if t.target not in index:
                index[t.target] = len(order)
                order.append(t.target)
                frontier.append((t.target, d + 1))
            transitions.append((index[x], index[t.target], t))
    uniq = []
    seen = set()
    for entry in transitions:
        if (entry[0], entry[1], entry[2].dir, entry[2].label) not in seen:
            seen.add((entry[0], entry[1], entry[2].dir, entry[2].label))
            uniq.append(entry)
    return order, uniq


def _render_lts(order, transitions, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({
            "states": [syntax.format(x) for x in order],
            "transitions": [
                {"from": a, "to": b, "dir": t.dir.value,
                 "label": syntax.format(t.label),
                 **traces.transition_json(t)}
                for a, b, t in transitions
            ],
        }, indent=2)
    if fmt == "dot":
        lines = ["digraph lts {"]
        for i, x in enumerate(order):
            lines.append('  s%d [label="%s"];' % (i, syntax.format(x)))
        for a, b, t in transitions:
            style = "solid" if t.dir is Direction.FORWARD else "dashed"
            lines.append('  s%d -> s%d [label="%s", style=%s];'
                         % (a, b, syntax.format(t.label), style))
        lines.append("}")
        return "\n".join(lines)
    fwd = sum(1 for _, _, t in transitions if t.dir is Direction.FORWARD)
    bwd = len(transitions) - fwd
    lines = ["states: %d" % len(order),
             "transitions: %d forward, %d backward" % (fwd, bwd)]
    for i, x in enumerate(order):
        lines.append("S%d: %s" % (i, syntax.format(x)))
    for a, b, t in transitions:
        arrow = "-->" if t.dir is Direction.FORWARD else "~~>"
        lines.append("S%d %s S%d  %s" % (a, arrow, b, syntax.format(t.label)))
    return "\n".join(lines)


def cmd_enumerate(args) -> int:
    p = _read_term(args)
    order, transitions = _explore(p, _kind(args), args.depth)
    text = _render_lts(order, transitions, args.format)
    if getattr(args, "output", None):
        try:
            Path(args.output).write_text(text + "\n")
        except OSError as exc:
            raise _IOFailure(str(exc))
    else:
        print(text)
    return EXIT_OK


# --------------------------------------------------------------------------- #
# step (REPL)
# --------------------------------------------------------------------------- #

def cmd_step(args) -> int:
    p = _read_term(args)
    kind = _kind(args)
    current = syntax.initial(p, kind)
    session: list[Transition] = []
    out = sys.stdout
    while True:
        print("", file=out)
        print("term: %s" % syntax.format(current), file=out)
        fwd = semantics.forward_transitions(current, kind)
        bwd = semantics.backward_transitions(current)
        if not fwd and not bwd:
            print("no transitions", file=out)
        options: list[Transition] = []
        for t in fwd:
            options.append(t)
            print("  %d) -->  %s" % (len(options), syntax.format(t.label)), file=out)
        for t in bwd:
            options.append(t)
            print("  %d) ~~>  %s" % (len(options), syntax.format(t.label)), file=out)
        print("select a number, or: undo, trace, quit", file=out)
        line = sys.stdin.readline()
        if not line:
            return EXIT_OK
        cmdline = line.strip().lower()
        if cmdline in ("q", "quit", "exit"):
            return EXIT_OK
        if cmdline in ("t", "trace"):
            if session:
                print(traces.trace_json_str(traces.Trace(tuple(session))), file=out)
            else:
                print("[]", file=out)
            continue
        if cmdline in ("u", "undo"):
            if not session:
                print("nothing to undo", file=out)
                continue
            last = session.pop()
            inverse = traces.reverse_transition(last)
            current = inverse.target
            print("undid %s" % syntax.format(last.label), file=out)
            continue
        try:
            pick = int(cmdline)
        except ValueError:
            print("unrecognised input %r" % cmdline, file=out)
            continue
        if not 1 <= pick <= len(options):
            print("selection out of range", file=out)
            continue
        chosen = options[pick - 1]
        session.append(chosen)
        current = chosen.target
    return EXIT_OK


# --------------------------------------------------------------------------- #
# check
# --------------------------------------------------------------------------- #

def _corpus_entries(args) -> list[tuple[str, Process]]:
    if args.corpus:
        try:
            entries = corpus.load_corpus_dir(args.corpus)
        except OSError as exc:
            raise _IOFailure(str(exc))
        if not entries:
            raise _IOFailure("no .pi files under %s" % args.corpus)
        return entries
    if args.term or args.input:
        return [("input", _read_term(args))]
    return corpus.acceptance_corpus()


def cmd_check(args) -> int:
    kind = _kind(args)
    if args.which == "correspondence" and kind is not MemoryKind.BSC:
        raise _IOFailure("check correspondence requires --semantics bsc")
    entries = _corpus_entries(args)
    all_violations = []
    results = []
    for name, p in entries:
        if args.which == "loop":
            v = checks.check_loop(p, kind, args.depth)
        elif args.which == "square":
            v = checks.check_square(p, kind, args.depth)
        elif args.which == "consistency":
            v = checks.check_consistency(p, kind, maxlen=args.depth)
        elif args.which == "bisim":
            v = checks.check_bisim(p, kind, args.depth)
        elif args.which == "correspondence":
            rep1 = correspondence.check_structural_correspondence(p, args.depth)
            rep2 = correspondence.check_causal_correspondence(p, args.depth)
            v = rep1.violations + rep2.violations
        else:
            raise _IOFailure("unknown suite %r" % args.which)
        results.append({"process": syntax.format(p), "name": name,
                        "violations": v})
        all_violations.extend(v)
    if args.format == "json":
        print(json.dumps({"suite": args.which, "depth": args.depth,
                          "semantics": kind.value, "results": results}, indent=2))
    else:
        for r in results:
            status = "ok" if not r["violations"] else "FAIL(%d)" % len(r["violations"])
            print("%-28s %s" % (r["name"], status))
            for v in r["violations"]:
                print("    %s" % json.dumps(v))
        print("suite %s: %d process(es), %d violation(s)"
              % (args.which, len(results), len(all_violations)))
    return EXIT_VIOLATION if all_violations else EXIT_OK


# --------------------------------------------------------------------------- #
# entry point
# --------------------------------------------------------------------------- #

def _add_common(sp, with_output=False):
    sp.add_argument("term", nargs="?", help="inline process term")
    sp.add_argument("--semantics", choices=[k.value for k in MemoryKind],
                    default="rpi")
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--format", choices=["text", "json", "dot"], default="text")
    sp.add_argument("--input", help="file holding one term (# comments allowed)")
    if with_output:
        sp.add_argument("--output", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="revpi",
        description="reversible pi-calculus engine with pluggable extrusion memories")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("enumerate", help="print the reachable LTS fragment")
    _add_common(sp, with_output=True)
    sp.set_defaults(fn=cmd_enumerate)

    sp = sub.add_parser("step", help="interactive forward/backward stepping")
    _add_common(sp)
    sp.set_defaults(fn=cmd_step)

    sp = sub.add_parser("check", help="run a property suite")
    sp.add_argument("which", choices=["loop", "square", "consistency",
                                      "correspondence", "bisim"])
    _add_common(sp)
    sp.add_argument("--corpus", help="directory of .pi files")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("export", help="enumerate straight to a file")
    _add_common(sp, with_output=True)
    sp.set_defaults(fn=cmd_export)
    return ap


def cmd_export(args) -> int:
    if not getattr(args, "output", None):
        raise _IOFailure("export requires --output")
    return cmd_enumerate(args)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    except _IOFailure as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
