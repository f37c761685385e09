"""Avatar pathfinding and time-stepped path following.

Paths are planned with 8-connected A* on the heightmap grid and followed
strictly along the resulting polyline. Advancement is budgeted by arc length,
so distance covered per tick is exactly speed * dt until arrival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappush, heappop

from .geometry import Vec3, wrap_angle
from .world import WorldModel

WALK_SPEED = 4.0   # m/s; a 2160 m course takes 9 minutes
RUN_SPEED = 9.0    # m/s; the same course takes 4 minutes
ARRIVE_EPS = 0.01  # final waypoint counts as reached within 1 cm

_NEIGHBORS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


def plan_path(world: WorldModel, start: Vec3, goal: Vec3) -> list[Vec3] | None:
    """8-connected A* between the grid nodes nearest start and goal.

    Edges connect navigable nodes whose mutual slope stays within the world
    limit; edge cost is the 3D segment length and the heuristic the straight
    2D distance, so returned paths are cost-optimal. Equal-f ties pop in
    lexicographic (x, z) order. Returns None when no path exists.
    """
    nav = world.nav_grid()
    heights = world.heights
    cell = world.cell_size
    rows, cols = heights.shape
    max_tan = world.max_slope_tan

    def node_of(p: Vec3) -> tuple[int, int]:
        i = min(max(int(round(p.x / cell)), 0), cols - 1)
        j = min(max(int(round(p.z / cell)), 0), rows - 1)
        return i, j

    si, sj = node_of(start)
    gi, gj = node_of(goal)
    if not nav[sj, si] or not nav[gj, gi]:
        return None
    if (si, sj) == (gi, gj):
        return [start, goal]

    def heuristic(i: int, j: int) -> float:
        return math.hypot((i - gi) * cell, (j - gj) * cell)

    g_cost = {(si, sj): 0.0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    open_heap: list[tuple[float, int, int]] = [(heuristic(si, sj), si, sj)]
    closed = set()

    while open_heap:
        f, i, j = heappop(open_heap)
        if (i, j) in closed:
            continue
        if (i, j) == (gi, gj):
            cells = [(i, j)]
            while cells[-1] in came:
                cells.append(came[cells[-1]])
            cells.reverse()
            path = [start]
            path += [Vec3(ci * cell, float(heights[cj, ci]), cj * cell)
                     for ci, cj in cells]
            path.append(goal)
            return path
        closed.add((i, j))
        base = g_cost[(i, j)]
        h_here = heights[j, i]
        for di, dj in _NEIGHBORS:
            ni, nj = i + di, j + dj
            if not (0 <= ni < cols and 0 <= nj < rows) or not nav[nj, ni]:
                continue
            run = cell * (math.sqrt(2.0) if di and dj else 1.0)
            dh = float(heights[nj, ni] - h_here)
            if abs(dh) > max_tan * run:
                continue
            cost = base + math.sqrt(run * run + dh * dh)
            if cost < g_cost.get((ni, nj), math.inf):
                g_cost[(ni, nj)] = cost
                came[(ni, nj)] = (i, j)
                heappush(open_heap, (cost + heuristic(ni, nj), ni, nj))
    return None


def path_length(path: list[Vec3]) -> float:
    return sum(path[k + 1].distance_to(path[k]) for k in range(len(path) - 1))


@dataclass
class Avatar:
    """First-person body: a pose, an optional path, and a speed mode."""

    position: Vec3
    yaw: float = 0.0
    walk_speed: float = WALK_SPEED
    run_speed: float = RUN_SPEED
    running: bool = False
    path: list[Vec3] = field(default_factory=list)
    distance_walked_virtual: float = 0.0
    # exact point on the path polyline; the displayed position is this point
    # with y snapped to the terrain, which must not perturb budget accounting
    _cursor: Vec3 | None = None

    @property
    def speed(self) -> float:
        return self.run_speed if self.running else self.walk_speed

    def set_path(self, waypoints: list[Vec3]) -> None:
        self.path = list(waypoints)
        self._cursor = None

    def clear_path(self) -> None:
        self.path = []
        self._cursor = None

    def has_path(self) -> bool:
        return bool(self.path)

    def move_physically(self, dx: float, dz: float, world: WorldModel) -> float:
        """Direct displacement (room walking). Rejected when it would leave
        the world, climb past the slope limit, or enter an obstacle.
        Returns the distance actually moved."""
        nx, nz = self.position.x + dx, self.position.z + dz
        target = Vec3(nx, 0.0, nz)
        if not world.in_bounds(nx, nz):
            return 0.0
        target = Vec3(nx, world.height_at(nx, nz), nz)
        if not world.is_navigable(target):
            return 0.0
        moved = math.hypot(dx, dz)
        self.position = target
        self._cursor = None
        if moved > 1e-9:
            self.yaw = wrap_angle(math.atan2(dx, dz))
        self.distance_walked_virtual += moved
        return moved

    def teleport_to(self, point: Vec3) -> None:
        """Instant relocation; does not count as walked distance."""
        self.position = point
        self.path = []
        self._cursor = None

    def advance(self, dt: float, world: WorldModel) -> bool:
        """Follow the path polyline for one tick. Returns True on arrival."""
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        if not self.path:
            return False
        budget = self.speed * dt
        pos = self._cursor if self._cursor is not None else self.position
        while self.path and budget > 0.0:
            wp = self.path[0]
            d = pos.distance_to(wp)
            if abs(wp.x - pos.x) > 1e-9 or abs(wp.z - pos.z) > 1e-9:
                self.yaw = wrap_angle(math.atan2(wp.x - pos.x, wp.z - pos.z))
            if d <= budget or d <= ARRIVE_EPS:
                pos = wp
                budget -= d
                self.path.pop(0)
                self.distance_walked_virtual += d
            else:
                f = budget / d
                pos = Vec3(pos.x + (wp.x - pos.x) * f,
                           pos.y + (wp.y - pos.y) * f,
                           pos.z + (wp.z - pos.z) * f)
                self.distance_walked_virtual += budget
                budget = 0.0
        self._cursor = None if not self.path else pos
        # displayed height follows the terrain between waypoints
        if world.in_bounds(pos.x, pos.z):
            pos = Vec3(pos.x, world.height_at(pos.x, pos.z), pos.z)
        self.position = pos
        return not self.path
