import numpy as np
import pytest

from helpers import make_ws, region_atom
from stlplan.decomposer import (Decomposition, DisjunctiveFSet, LocalTask,
                                compute_cuts, decompose, explain,
                                split_subtask)
from stlplan.scenario_cli import load_scenario
from stlplan.stl_core import (PointSequence, StlError, SubTask, TimeInterval,
                              oracle_satisfies, parse_formula)


def _sub(kind, outer, inner=None, negated=False, box=((0, 0), (2, 2))):
    prop = region_atom("r", box[0], box[1], negated=negated)
    iv = TimeInterval(*outer)
    return SubTask(kind, iv, TimeInterval(*inner) if inner else None, prop)


# ---------------------------------------------------------------------------
# cuts

def test_cuts_of_the_shipped_scenarios():
    for name, expected in [("scenario1", (0.0, 20.0, 30.0, 50.0, 60.0)),
                           ("scenario2", (0.0, 20.0, 40.0, 60.0)),
                           ("scenario3", (0.0, 15.0, 25.0, 45.0, 50.0))]:
        scenario = load_scenario(name)
        assert compute_cuts(scenario.formula) == expected


def test_single_subtask_cuts_are_start_and_horizon():
    ws = make_ws(regions=[("mu", (0.0, 0.0), (1.0, 1.0))])
    f = parse_formula("F[0,60] mu", ws, tau=0.1)
    assert compute_cuts(f) == (0.0, 60.0)


def test_upper_bounds_inside_nested_spans_are_skipped():
    ws = make_ws(regions=[("a", (0.0, 0.0), (1.0, 1.0)),
                          ("b", (2.0, 2.0), (3.0, 3.0))])
    # the F upper bound 15 falls strictly inside the patrol span [0,20]
    f = parse_formula("G[0,10] F[0,10] a & F[0,15] b", ws, tau=0.1)
    assert compute_cuts(f) == (0.0, 20.0)


# ---------------------------------------------------------------------------
# splitting

def test_split_hold_subtask_into_window_pieces():
    cuts = (0.0, 20.0, 30.0, 50.0, 60.0)
    g = _sub("G", (0, 30), negated=True)
    pieces = split_subtask(g, cuts)
    assert [(p.kind, p.outer.lo, p.outer.hi) for p in pieces] == \
        [("G", 0.0, 20.0), ("G", 20.0, 30.0)]
    assert all(p.prop is g.prop for p in pieces)


def test_split_reach_subtask_becomes_disjunctive_set():
    cuts = (0.0, 20.0, 30.0, 50.0, 60.0)
    f = _sub("F", (0, 60))
    dset = split_subtask(f, cuts)
    assert isinstance(dset, DisjunctiveFSet)
    assert [(p.outer.lo, p.outer.hi) for p in dset.pieces] == \
        [(0.0, 20.0), (20.0, 30.0), (30.0, 50.0), (50.0, 60.0)]
    assert dset.origin is f
    assert dset.final_piece.outer == TimeInterval(50, 60)


def test_split_leaves_single_window_subtasks_alone():
    cuts = (0.0, 20.0, 30.0, 50.0, 60.0)
    f = _sub("F", (50, 60))
    assert split_subtask(f, cuts) == [f]
    gf = _sub("GF", (0, 10), (0, 10))
    assert split_subtask(gf, cuts) == [gf]


def test_split_pieces_tile_the_original_interval():
    rng = np.random.default_rng(5)
    for _ in range(200):
        ends = np.unique(rng.integers(0, 40, size=rng.integers(2, 6)))
        if len(ends) < 2:
            continue
        cuts = tuple(float(c) for c in ends)
        lo = float(rng.integers(0, 39))
        hi = float(rng.integers(lo, 40))
        sub = _sub(str(rng.choice(["F", "G"])), (lo, hi))
        pieces = split_subtask(sub, cuts)
        if isinstance(pieces, DisjunctiveFSet):
            pieces = pieces.pieces
        assert pieces[0].outer.lo == lo
        assert pieces[-1].outer.hi == hi
        for a, b in zip(pieces[:-1], pieces[1:]):
            assert a.outer.hi == b.outer.lo


# ---------------------------------------------------------------------------
# full decomposition

def test_first_scenario_decomposes_into_four_windows():
    scenario = load_scenario("scenario1")
    dec = decompose(scenario.formula, scenario.tau)
    assert dec.cuts == (0.0, 20.0, 30.0, 50.0, 60.0)
    windows = [(t.window.lo, t.window.hi) for t in dec.local_tasks]
    assert windows == [(0.0, 20.0), (20.0, 30.0), (30.0, 50.0),
                       (50.0, 60.0)]

    by_window = {t.index: sorted(str(s) for s in t.subtasks)
                 for t in dec.local_tasks}
    assert by_window[1] == ["G[0,10] F[0,10] mu1&mu2", "G[0,20] !mu4"]
    assert by_window[2] == ["G[20,30] !mu4"]
    assert by_window[3] == ["G[30,46] F[0,4] mu5"]
    assert by_window[4] == []

    sets = {str(d.origin): d for d in dec.disjunctive_sets}
    reach3 = sets["F[0,30] mu3"]
    assert [str(p) for p in reach3.pieces] == ["F[0,20] mu3",
                                               "F[20,30] mu3"]
    assert dec.local_index_of(reach3.final_piece) == 2
    reach6 = sets["F[0,60] mu6"]
    assert [str(p) for p in reach6.pieces] == \
        ["F[0,20] mu6", "F[20,30] mu6", "F[30,50] mu6", "F[50,60] mu6"]
    assert dec.local_index_of(reach6.final_piece) == 4


def test_single_subtask_formula_decomposes_to_itself():
    ws = make_ws(regions=[("mu", (0.0, 0.0), (1.0, 1.0))])
    f = parse_formula("F[0,60] mu", ws, tau=0.1)
    dec = decompose(f, 0.1)
    assert len(dec.local_tasks) == 1
    assert dec.local_tasks[0].subtasks == f.subtasks
    assert dec.disjunctive_sets == ()


def test_zero_horizon_formula_is_rejected():
    ws = make_ws(regions=[("mu", (0.0, 0.0), (1.0, 1.0))])
    f = parse_formula("F[0,0] mu", ws, tau=0.1)
    with pytest.raises(StlError):
        decompose(f, 0.1)


def test_guard_subtasks_collects_every_hold_piece():
    scenario = load_scenario("scenario1")
    dec = decompose(scenario.formula, scenario.tau)
    guards = dec.guard_subtasks()
    assert sorted(str(g) for g in guards) == ["G[0,20] !mu4",
                                              "G[20,30] !mu4"]


def test_explain_lists_cuts_and_fallbacks():
    scenario = load_scenario("scenario1")
    text = explain(decompose(scenario.formula, scenario.tau))
    assert "cut times (0, 20, 30, 50, 60)" in text
    assert "fallback piece F[50,60] mu6 in local task 4" in text


# ---------------------------------------------------------------------------
# semantic properties

def _random_formula(rng):
    """A validated random conjunction on a 1 s grid."""
    subtasks = []
    n = int(rng.integers(1, 4))
    nested_spans = []
    for _ in range(n):
        kind = str(rng.choice(["F", "G", "FG", "GF"]))
        lo = rng.uniform(0.0, 6.0, size=2)
        prop = region_atom("r", tuple(lo), tuple(lo + 3.0),
                           negated=bool(kind == "G" and rng.random() < 0.4))
        if kind in ("F", "G"):
            a = int(rng.integers(0, 20))
            b = int(rng.integers(a + 1, 25))
            subtasks.append(SubTask(kind, TimeInterval(a, b), None, prop))
            continue
        for _ in range(20):
            a = int(rng.integers(0, 15))
            b = int(rng.integers(a, 18))
            d = int(rng.integers(1, 5))
            span = (a, b + d)
            if all(span[1] <= s[0] or s[1] <= span[0]
                   for s in nested_spans):
                nested_spans.append(span)
                subtasks.append(SubTask(kind, TimeInterval(a, b),
                                        TimeInterval(0, d), prop))
                break
    if not subtasks:
        subtasks.append(SubTask("F", TimeInterval(0, 5), None,
                                region_atom("r", (0, 0), (3, 3))))
    from stlplan.stl_core import Formula
    return Formula(tuple(subtasks), tuple(("sub", s) for s in subtasks))


def test_decomposition_is_sound_for_random_formulas():
    rng = np.random.default_rng(17)
    premise_held = 0
    for _ in range(200):
        formula = _random_formula(rng)
        formula.validate(1.0)
        dec = decompose(formula, 1.0)
        k_hi = int(formula.horizon)
        targets = [s.prop.region.box for s in formula.subtasks
                   if not s.prop.negated]
        pts = np.empty((k_hi + 1, 2))
        for j in range(k_hi + 1):
            # mostly inside the reach/stay regions, to make the premise
            # reachable often enough
            if targets and rng.random() < 0.8:
                pts[j] = targets[int(rng.integers(len(targets)))].sample(rng)
            else:
                pts[j] = rng.uniform(0.0, 10.0, size=2)
        seq = PointSequence(0, 1.0, pts)
        assigned_ok = all(oracle_satisfies(seq, s)
                          for t in dec.local_tasks for s in t.subtasks)
        sets_ok = all(any(oracle_satisfies(seq, p) for p in d.pieces)
                      for d in dec.disjunctive_sets)
        if assigned_ok and sets_ok:
            premise_held += 1
            for sub in formula.subtasks:
                assert oracle_satisfies(seq, sub)
    assert premise_held > 10


def test_hold_split_is_equivalent_to_the_original():
    rng = np.random.default_rng(23)
    for _ in range(300):
        a = int(rng.integers(0, 10))
        b = int(rng.integers(a + 2, 21))
        sub = _sub("G", (a, b), negated=bool(rng.random() < 0.3))
        inner = sorted(set(int(c) for c in rng.integers(a + 1, b, size=2)
                           if a < c < b))
        cuts = tuple([float(a)] + [float(c) for c in inner] + [float(b)])
        pieces = split_subtask(sub, cuts)
        pts = np.where(rng.random((b + 1, 2)) < 0.5,
                       rng.uniform(0, 2, (b + 1, 2)),
                       rng.uniform(0, 10, (b + 1, 2)))
        seq = PointSequence(0, 1.0, pts)
        whole = oracle_satisfies(seq, sub)
        assert whole == all(oracle_satisfies(seq, p) for p in pieces)


def test_reach_split_covers_exactly_the_original():
    rng = np.random.default_rng(29)
    for _ in range(300):
        a = int(rng.integers(0, 10))
        b = int(rng.integers(a + 2, 20))
        sub = _sub("F", (a, b))
        mid = int(rng.integers(a + 1, b))
        cuts = (float(a), float(mid), float(b))
        result = split_subtask(sub, cuts)
        pieces = result.pieces if isinstance(result, DisjunctiveFSet) \
            else result
        pts = np.where(rng.random((b + 1, 2)) < 0.15,
                       rng.uniform(0, 2, (b + 1, 2)),
                       rng.uniform(2.5, 10, (b + 1, 2)))
        seq = PointSequence(0, 1.0, pts)
        whole = oracle_satisfies(seq, sub)
        assert whole == any(oracle_satisfies(seq, p) for p in pieces)
