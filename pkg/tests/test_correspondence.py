import json

import pytest

from conftest import parse, run, start
from revpi import correspondence, syntax
from revpi.correspondence import (
    HistoryGraph, KeyNotInHistoryError, cause_subgraph, check_causal_correspondence,
    check_structural_correspondence, contract, history_graph, rem,
)
from revpi.memory import MemoryKind


def _graph(vertices, edges):
    return HistoryGraph(tuple(vertices), frozenset(edges))


# --------------------------------------------------------------------------- #
# history graphs
# --------------------------------------------------------------------------- #

def test_initial_graph_is_empty():
    g = history_graph(start("nu a.(b!a.0 | a?(x).0)"))
    assert g.vertices == () and g.edges == frozenset()


def test_communication_gives_twin_vertices():
    (tau,) = run("b!a.0 | b?(x).x!c.0", ["tau"])
    g = history_graph(tau.target)
    assert g.key_multiset() == (1, 1)
    (v1, _), (v2, _) = g.vertices
    assert g.edges == frozenset({(v1, v2), (v2, v1)})


def test_nested_key_adds_directed_edge():
    tau, out = run("b!a.0 | b?(x).x!c.0", ["tau", "a!c"])
    g = history_graph(out.target)
    assert g.key_multiset() == (1, 1, 2)
    occ2 = g.occurrences(2)[0]
    in_half = [vid for vid, lab in g.vertices
               if lab == 1 and (vid, occ2) in g.edges]
    assert len(in_half) == 1


# --------------------------------------------------------------------------- #
# ancestry
# --------------------------------------------------------------------------- #

def test_cause_subgraph_through_twins():
    tau, out = run("b!a.0 | b?(x).x!c.0", ["tau", "a!c"])
    g = history_graph(out.target)
    sub = cause_subgraph(g, 2)
    assert sub.key_multiset() == (1, 1, 2)


def test_cause_subgraph_fresh_vertex():
    g = _graph([], [])
    sub = cause_subgraph(g, 7)
    assert sub.key_multiset() == (7,)
    assert sub.edges == frozenset()


def test_cause_subgraph_linear_chain():
    g = _graph([(0, 1), (1, 2), (2, 3)], [(0, 1), (1, 2)])
    sub = cause_subgraph(g, 3)
    assert sub.key_multiset() == (1, 2, 3)
    assert cause_subgraph(g, 1).key_multiset() == (1,)


# --------------------------------------------------------------------------- #
# contraction
# --------------------------------------------------------------------------- #

def test_contract_twin_pair():
    g = _graph([(0, 1), (1, 1), (2, 2)], [(0, 1), (1, 0), (1, 2)])
    got = contract(g)
    assert got.contracted_vertices() == ["tau1"]
    assert got.key_multiset() == (2,)
    (tau_vid,) = [vid for vid, lab in got.vertices if lab == "tau1"]
    (two_vid,) = [vid for vid, lab in got.vertices if lab == 2]
    assert got.edges == frozenset({(tau_vid, two_vid)})


def test_contract_without_pairs_is_identity():
    g = _graph([(0, 1), (1, 2)], [(0, 1)])
    assert contract(g) == g


def test_contract_two_pairs_get_distinct_names():
    g = _graph([(0, 1), (1, 1), (2, 2), (3, 2)],
               [(0, 1), (1, 0), (2, 3), (3, 2)])
    got = contract(g)
    assert sorted(got.contracted_vertices()) == ["tau1", "tau2"]
    assert got.key_multiset() == ()


def test_contract_shrinks_by_one_vertex_per_pair():
    g = _graph([(0, 1), (1, 1), (2, 2), (3, 2), (4, 5)],
               [(0, 1), (1, 0), (2, 3), (3, 2), (1, 4)])
    got = contract(g)
    assert len(got.vertices) == len(g.vertices) - 2


def test_history_dot():
    (tau,) = run("b!a.0 | b?(x).x!c.0", ["tau"])
    dot = history_graph(tau.target).to_dot()
    assert dot.startswith("digraph history {")
    assert "dir=both" in dot


# --------------------------------------------------------------------------- #
# rem
# --------------------------------------------------------------------------- #

def test_rem_after_communication():
    tau, out = run("a!b.0 | a?(x).d!e.0", ["tau", "d!e"])
    kf, kb = rem(out.target, 2)
    assert kf == (1, 1)
    assert kb == frozenset()


def test_rem_first_action():
    (t,) = run("a!b.0", ["a!b"])
    assert rem(t.target, 1) == ((), frozenset())


def test_rem_visible_chain():
    steps = run("a!b.c!d.e!f.0", ["a!b", "c!d", "e!f"])
    kf, kb = rem(steps[-1].target, 3)
    assert kf == (1, 2)
    assert kb == frozenset({1, 2})


def test_rem_unknown_key():
    (t,) = run("a!b.0", ["a!b"])
    with pytest.raises(KeyNotInHistoryError):
        rem(t.target, 9)


# --------------------------------------------------------------------------- #
# structural correspondence
# --------------------------------------------------------------------------- #

def test_structural_correspondence_three_extruders():
    report = check_structural_correspondence(
        parse("nu a.(b!a.0 | c!a.0 | a?(x).0)"), 4)
    assert report.ok
    assert report.checks


def test_structural_correspondence_strict_multiset():
    report = check_structural_correspondence(parse("a!b.0 | a?(x).d!e.0"), 4)
    assert report.ok
    entries = [c for c in report.checks if c["kf"] == [1, 1]]
    assert entries and all(c["kb"] == [] for c in entries)


def test_structural_correspondence_nil():
    report = check_structural_correspondence(parse("0"), 4)
    assert report.ok and not report.checks


def test_report_serializes():
    report = check_structural_correspondence(parse("a!b.0"), 2)
    data = json.loads(report.to_json_str())
    assert set(data) == {"process", "depth", "checks", "violations"}


# --------------------------------------------------------------------------- #
# causal correspondence
# --------------------------------------------------------------------------- #

def test_causal_correspondence_three_extruders():
    report = check_causal_correspondence(
        parse("nu a.(b!a.0 | c!a.0 | a?(z).0)"), 4)
    assert report.ok
    full = [c for c in report.checks if len(c["trace"]) == 3]
    assert full


def test_causal_correspondence_sequential():
    report = check_causal_correspondence(parse("a!b.c!d.0"), 4)
    assert report.ok


def test_causal_correspondence_visible_pair():
    report = check_causal_correspondence(parse("b!a.0 | b?(x).x!c.0"), 4)
    assert report.ok
