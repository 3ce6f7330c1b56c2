"""Timeline decomposition of a task formula into local tasks.

The planning horizon is cut at the upper ends of sub-task active
intervals, skipping candidates that fall strictly inside the active
interval of a nested (FG/GF) sub-task so those stay whole.  Plain F and
G sub-tasks that span several cut windows are split at the cuts: every
piece of a G must hold, while an F spanning cuts turns into a
disjunctive family of reach pieces of which one must be satisfied.
"""

from __future__ import annotations

from dataclasses import dataclass

from .stl_core import StlError, SubTask, TimeInterval


@dataclass(frozen=True)
class LocalTask:
    """Sub-tasks whose active intervals fit one cut window."""

    index: int
    window: TimeInterval
    subtasks: tuple

    def __post_init__(self):
        object.__setattr__(self, "subtasks", tuple(self.subtasks))


@dataclass(frozen=True)
class DisjunctiveFSet:
    """Pieces of a cut-spanning reach sub-task; one of them must hold.

    The final piece acts as the fallback: a planner commits to it when
    no earlier piece was satisfied along the way.
    """

    origin: SubTask
    pieces: tuple

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if len(self.pieces) < 2:
            raise ValueError("a disjunctive set needs at least two pieces")

    @property
    def final_piece(self):
        return self.pieces[-1]


@dataclass(frozen=True)
class Decomposition:
    formula: object
    cuts: tuple
    local_tasks: tuple
    disjunctive_sets: tuple

    def local_index_of(self, sub):
        """1-based index of the cut window containing the sub-task."""
        ai = sub.active_interval()
        for task in self.local_tasks:
            if task.window.contains_interval(ai):
                return task.index
        raise StlError(f"{sub} fits no cut window")

    def guard_subtasks(self):
        """Every assigned always-piece, across all local tasks."""
        return tuple(s for task in self.local_tasks for s in task.subtasks
                     if s.kind == "G")

    def explain(self):
        return explain(self)


def compute_cuts(formula):
    """Cut times: zero plus every active-interval upper end that does not
    fall strictly inside a nested sub-task's active interval."""
    nested = [s.active_interval() for s in formula.subtasks if s.nested]
    candidates = {s.active_interval().hi for s in formula.subtasks}
    kept = {c for c in candidates
            if not any(n.interior_contains(c) for n in nested)}
    cuts = tuple(sorted(kept | {0.0}))
    # The horizon itself is never interior to a nested interval, so the
    # last cut always equals the horizon.
    assert cuts[-1] == formula.horizon
    return cuts


def split_subtask(sub, cuts):
    """Split one sub-task at the cut times inside its active interval.

    Returns a list of pieces (all of which must hold), or a
    DisjunctiveFSet when a reach sub-task spans several windows.  Nested
    sub-tasks are never split.
    """
    ai = sub.active_interval()
    if sub.nested:
        inside = [c for c in cuts if ai.interior_contains(c)]
        if inside:
            raise StlError(f"cut at {inside[0]} splits nested sub-task {sub}")
        return [sub]
    inner_cuts = [c for c in cuts if ai.interior_contains(c)]
    if not inner_cuts:
        return [sub]
    bounds = [ai.lo] + inner_cuts + [ai.hi]
    pieces = [SubTask(sub.kind, TimeInterval(a, b), None, sub.prop)
              for a, b in zip(bounds[:-1], bounds[1:])]
    if sub.kind == "F":
        return DisjunctiveFSet(sub, tuple(pieces))
    return pieces


def decompose(formula, tau=None):
    """Split a formula along the timeline into per-window local tasks.

    When tau is given the formula is validated against it first.  Pieces
    of split G sub-tasks and all unsplit sub-tasks are assigned to the
    cut window that contains their active interval (earliest window on
    boundary ties); cut-spanning F sub-tasks become disjunctive sets
    that are resolved during planning.
    """
    if tau is not None:
        formula.validate(tau)
    if formula.horizon <= 0.0:
        raise StlError("task constrains only time zero; nothing to plan")
    cuts = compute_cuts(formula)
    windows = [TimeInterval(a, b) for a, b in zip(cuts[:-1], cuts[1:])]
    assigned = [[] for _ in windows]
    disjunctive = []
    for sub in formula.subtasks:
        result = split_subtask(sub, cuts)
        if isinstance(result, DisjunctiveFSet):
            disjunctive.append(result)
            continue
        for piece in result:
            ai = piece.active_interval()
            for i, w in enumerate(windows):
                if w.contains_interval(ai):
                    assigned[i].append(piece)
                    break
            else:
                raise AssertionError(f"piece {piece} fits no cut window")
    tasks = tuple(LocalTask(i + 1, w, tuple(assigned[i]))
                  for i, w in enumerate(windows))
    return Decomposition(formula, cuts, tasks, tuple(disjunctive))


def explain(decomposition):
    """Human-readable decomposition report."""
    lines = []
    cuts = ", ".join(_fmt(c) for c in decomposition.cuts)
    lines.append(f"horizon {_fmt(decomposition.formula.horizon)} s, "
                 f"cut times ({cuts})")
    for task in decomposition.local_tasks:
        lines.append(f"local task {task.index} over {task.window}:")
        if not task.subtasks:
            lines.append("  (no assigned sub-tasks)")
        for sub in task.subtasks:
            note = "kept whole" if sub.nested else "must hold"
            lines.append(f"  {sub}  [{note}]")
    if decomposition.disjunctive_sets:
        lines.append("disjunctive reach choices (one piece each):")
        for d in decomposition.disjunctive_sets:
            alts = " | ".join(str(p) for p in d.pieces)
            idx = decomposition.local_index_of(d.final_piece)
            lines.append(f"  {d.origin} -> {alts}")
            lines.append(f"    fallback piece {d.final_piece} in local task "
                         f"{idx}")
    return "\n".join(lines)


def _fmt(v):
    if v == int(v):
        return str(int(v))
    return repr(v)
