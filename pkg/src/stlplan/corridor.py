"""Obstacle-free box corridors around waypoint sequences.

Each waypoint gets an axis-aligned box grown around it: faces take
turns expanding by a fixed increment and freeze by snapping onto the
first obstacle face or workspace bound they would otherwise cross.
Consecutive waypoints reuse the previous box while they stay inside it,
so a corridor typically holds far fewer distinct boxes than waypoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stl_core import Box, StlError

DEFAULT_STEP = 0.05


class CorridorError(StlError):
    pass


@dataclass(frozen=True)
class SafeCorridor:
    """One box per waypoint; consecutive entries may share the object."""

    boxes: tuple

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))

    def __len__(self):
        return len(self.boxes)

    def __getitem__(self, k):
        return self.boxes[k]

    def distinct(self):
        """The distinct boxes in first-use order."""
        out = []
        for b in self.boxes:
            if not out or out[-1] is not b:
                out.append(b)
        return out

    def validate(self, ws, waypoints):
        """Raise unless every box contains its waypoint, stays inside the
        workspace, and keeps its interior clear of every obstacle."""
        pts = np.asarray(waypoints, dtype=float)
        if len(pts) != len(self.boxes):
            raise CorridorError("corridor length does not match waypoints")
        for k, (box, p) in enumerate(zip(self.boxes, pts)):
            if not box.contains(p):
                raise CorridorError(f"box {k} does not contain its waypoint")
            if any(l < bl or h > bh for l, h, bl, bh in
                   zip(box.lo, box.hi, ws.bounds.lo, ws.bounds.hi)):
                raise CorridorError(f"box {k} leaves the workspace")
            for o in ws.obstacles:
                if box.open_intersects(o):
                    raise CorridorError(f"box {k} overlaps an obstacle")


def _blocked_overlap(box_lo, box_hi, obstacle, axis):
    """Closed overlap on every axis except the expanding one."""
    for j in range(len(box_lo)):
        if j == axis:
            continue
        if max(box_lo[j], obstacle.lo[j]) > min(box_hi[j], obstacle.hi[j]):
            return False
    return True


def safe_cor(point, ws, step=DEFAULT_STEP):
    """Largest box the face-expansion schedule reaches around one point.

    Faces expand round-robin (x low, x high, y low, y high, ...) by the
    step increment and freeze by snapping exactly onto whatever blocks
    them: an obstacle face or the workspace bound.
    """
    p = np.asarray(point, dtype=float)
    if not ws.point_free(p):
        raise CorridorError(f"corridor seed {p.tolist()} is not in free "
                            f"space")
    dim = ws.bounds.dim
    lo = [float(v) for v in p]
    hi = [float(v) for v in p]
    frozen = [[False, False] for _ in range(dim)]
    while not all(all(f) for f in frozen):
        for axis in range(dim):
            for side in (0, 1):
                if frozen[axis][side]:
                    continue
                if side == 0:
                    cur = lo[axis]
                    target = max(cur - step, ws.bounds.lo[axis])
                    blockers = [o.hi[axis] for o in ws.obstacles
                                if _blocked_overlap(lo, hi, o, axis)
                                and target < o.hi[axis] <= cur]
                    if blockers:
                        lo[axis] = max(blockers)
                        frozen[axis][side] = True
                    elif target == ws.bounds.lo[axis]:
                        lo[axis] = target
                        frozen[axis][side] = True
                    else:
                        lo[axis] = target
                else:
                    cur = hi[axis]
                    target = min(cur + step, ws.bounds.hi[axis])
                    blockers = [o.lo[axis] for o in ws.obstacles
                                if _blocked_overlap(lo, hi, o, axis)
                                and cur <= o.lo[axis] < target]
                    if blockers:
                        hi[axis] = min(blockers)
                        frozen[axis][side] = True
                    elif target == ws.bounds.hi[axis]:
                        hi[axis] = target
                        frozen[axis][side] = True
                    else:
                        hi[axis] = target
    return Box(tuple(lo), tuple(hi))


def construct_safe_corridor(waypoints, ws, step=DEFAULT_STEP):
    """Corridor for a waypoint sequence; a new box is grown only when a
    waypoint leaves the previous one."""
    pts = getattr(waypoints, "positions", None)
    if pts is None:
        pts = np.asarray(waypoints, dtype=float)
    boxes = []
    cur = None
    for p in pts:
        if cur is None or not cur.contains(p):
            cur = safe_cor(p, ws, step)
        boxes.append(cur)
    return SafeCorridor(tuple(boxes))
