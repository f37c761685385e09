"""Heightmap terrain with box/cylinder obstacles.

The world is immutable after construction. It answers the queries everything
else is built on: interpolated heights, straight and ballistic raycasts,
navigability, segment occlusion, and deterministic procedural generation of
the default long-path course.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import Vec3

WORLD_SCHEMA_VERSION = 1

DEFAULT_MAX_SLOPE_DEG = 30.0
DEFAULT_LAUNCH_SPEED = 20.0   # gives a ~40.8 m flat arc ceiling
DEFAULT_GRAVITY = 9.81
ARC_SAMPLE_DT = 0.01
HIT_TOLERANCE = 1e-3          # bisection refinement target, 1 mm


class WorldBoundsError(ValueError):
    """Query outside the heightmap grid."""


class WorldConfigError(ValueError):
    """Generation spec that cannot be satisfied."""


# ---------------------------------------------------------------------------
# Obstacles

@dataclass(frozen=True)
class Box:
    x0: float
    y0: float
    z0: float
    x1: float
    y1: float
    z1: float

    def footprint_contains(self, x: float, z: float) -> bool:
        return self.x0 <= x <= self.x1 and self.z0 <= z <= self.z1

    def footprint_bounds(self):
        return self.x0, self.z0, self.x1, self.z1

    def ray_hit(self, origin: Vec3, direction: Vec3, t_max: float):
        """Slab test; returns (t, normal) of the first face hit or None."""
        t_lo, t_hi = 0.0, t_max
        normal = None
        for o, d, lo, hi, axis in ((origin.x, direction.x, self.x0, self.x1, 0),
                                   (origin.y, direction.y, self.y0, self.y1, 1),
                                   (origin.z, direction.z, self.z0, self.z1, 2)):
            if abs(d) < 1e-12:
                if o < lo or o > hi:
                    return None
                continue
            ta = (lo - o) / d
            tb = (hi - o) / d
            sign = -1.0 if d > 0 else 1.0
            if ta > tb:
                ta, tb = tb, ta
            if ta > t_lo:
                t_lo = ta
                n = [0.0, 0.0, 0.0]
                n[axis] = sign
                normal = Vec3(*n)
            t_hi = min(t_hi, tb)
            if t_lo > t_hi:
                return None
        if normal is None:
            # origin inside the box
            return 0.0, Vec3(0.0, 1.0, 0.0)
        return t_lo, normal

    def to_dict(self) -> dict:
        return {"kind": "box", "min": [self.x0, self.y0, self.z0],
                "max": [self.x1, self.y1, self.z1]}


@dataclass(frozen=True)
class Cylinder:
    cx: float
    cz: float
    radius: float
    y0: float
    y1: float

    def footprint_contains(self, x: float, z: float) -> bool:
        return (x - self.cx) ** 2 + (z - self.cz) ** 2 <= self.radius ** 2

    def footprint_bounds(self):
        return (self.cx - self.radius, self.cz - self.radius,
                self.cx + self.radius, self.cz + self.radius)

    def ray_hit(self, origin: Vec3, direction: Vec3, t_max: float):
        hits = []
        # lateral surface: quadratic in the xz plane
        ox, oz = origin.x - self.cx, origin.z - self.cz
        a = direction.x ** 2 + direction.z ** 2
        b = 2.0 * (ox * direction.x + oz * direction.z)
        c = ox * ox + oz * oz - self.radius ** 2
        if a > 1e-12:
            disc = b * b - 4.0 * a * c
            if disc >= 0.0:
                root = math.sqrt(disc)
                for t in ((-b - root) / (2 * a), (-b + root) / (2 * a)):
                    if 0.0 <= t <= t_max:
                        y = origin.y + direction.y * t
                        if self.y0 <= y <= self.y1:
                            x = origin.x + direction.x * t
                            z = origin.z + direction.z * t
                            n = Vec3(x - self.cx, 0.0, z - self.cz)
                            hits.append((t, n.normalized() if n.norm() > 1e-9 else Vec3(0, 1, 0)))
        # caps
        if abs(direction.y) > 1e-12:
            for y_cap, ny in ((self.y1, 1.0), (self.y0, -1.0)):
                t = (y_cap - origin.y) / direction.y
                if 0.0 <= t <= t_max:
                    x = origin.x + direction.x * t
                    z = origin.z + direction.z * t
                    if (x - self.cx) ** 2 + (z - self.cz) ** 2 <= self.radius ** 2:
                        hits.append((t, Vec3(0.0, ny, 0.0)))
        if not hits:
            if c <= 0.0 and self.y0 <= origin.y <= self.y1:
                return 0.0, Vec3(0.0, 1.0, 0.0)
            return None
        return min(hits, key=lambda h: h[0])

    def to_dict(self) -> dict:
        return {"kind": "cylinder", "center": [self.cx, self.cz],
                "radius": self.radius, "y0": self.y0, "y1": self.y1}


def obstacle_from_dict(d: dict):
    if d["kind"] == "box":
        return Box(d["min"][0], d["min"][1], d["min"][2],
                   d["max"][0], d["max"][1], d["max"][2])
    if d["kind"] == "cylinder":
        return Cylinder(d["center"][0], d["center"][1], d["radius"], d["y0"], d["y1"])
    raise ValueError(f"unknown obstacle kind {d.get('kind')!r}")


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundHit:
    """Result of a ray or arc striking the world.

    Terrain hits satisfy point.y == interpolated height and normal.y > 0;
    obstacle hits (on_terrain False) carry the obstacle surface normal, which
    may be horizontal, and are never navigable.
    """

    point: Vec3
    normal: Vec3
    navigable: bool
    on_terrain: bool = True


@dataclass
class WorldSpec:
    """Parameters for procedural generation of a course world."""

    extent_x: float = 800.0
    extent_z: float = 800.0
    cell_size: float = 1.0
    path_length: float = 2160.0
    target_count: int = 7
    target_spacing: float | None = None   # None: even spacing along the path
    winding_cap: float = 3.0
    hill_count: int = 10
    tree_count: int = 120
    rock_count: int = 30
    max_slope_deg: float = DEFAULT_MAX_SLOPE_DEG

    def to_dict(self) -> dict:
        return asdict(self)


class WorldModel:
    """Immutable terrain grid plus obstacles, targets and an optional course.

    heights[j, i] is the elevation at (x = i * cell_size, z = j * cell_size).
    """

    def __init__(self, heights: np.ndarray, cell_size: float,
                 obstacles: list | None = None, targets: list[Vec3] | None = None,
                 seed: int | None = None, spec: WorldSpec | None = None,
                 course: list[Vec3] | None = None,
                 max_slope_deg: float = DEFAULT_MAX_SLOPE_DEG):
        heights = np.asarray(heights, dtype=np.float64)
        if heights.ndim != 2 or heights.shape[0] < 2 or heights.shape[1] < 2:
            raise ValueError("heightmap must be a grid of at least 2x2 samples")
        if not np.all(np.isfinite(heights)):
            raise ValueError("heightmap contains non-finite elevations")
        if cell_size <= 0.0:
            raise ValueError("cell size must be positive")
        self.heights = heights
        self.heights.setflags(write=False)
        self.cell_size = float(cell_size)
        self.obstacles = list(obstacles or [])
        self.targets = list(targets or [])
        self.seed = seed
        self.spec = spec
        self.course = list(course) if course else None
        self.max_slope_deg = float(max_slope_deg)
        self.max_slope_tan = math.tan(math.radians(self.max_slope_deg))
        self._nav_grid = None
        self._nav_labels = None
        for t in self.targets:
            if not self.is_navigable(t):
                raise ValueError(f"target {t.to_tuple()} is not on navigable ground")

    # -- extents ------------------------------------------------------------

    @property
    def size_x(self) -> float:
        return (self.heights.shape[1] - 1) * self.cell_size

    @property
    def size_z(self) -> float:
        return (self.heights.shape[0] - 1) * self.cell_size

    def in_bounds(self, x: float, z: float) -> bool:
        return 0.0 <= x <= self.size_x and 0.0 <= z <= self.size_z

    # -- height and slope queries --------------------------------------------

    def _cell_fractions(self, x: float, z: float):
        cols = self.heights.shape[1] - 1
        rows = self.heights.shape[0] - 1
        gx = min(max(x / self.cell_size, 0.0), cols)
        gz = min(max(z / self.cell_size, 0.0), rows)
        i = min(int(gx), cols - 1)
        j = min(int(gz), rows - 1)
        return i, j, gx - i, gz - j

    def height_at(self, x: float, z: float) -> float:
        """Bilinear interpolation of the four surrounding samples."""
        if not self.in_bounds(x, z):
            raise WorldBoundsError(f"({x}, {z}) outside world bounds")
        i, j, fx, fz = self._cell_fractions(x, z)
        h = self.heights
        return float((h[j, i] * (1 - fx) + h[j, i + 1] * fx) * (1 - fz)
                     + (h[j + 1, i] * (1 - fx) + h[j + 1, i + 1] * fx) * fz)

    def gradient_at(self, x: float, z: float) -> tuple[float, float]:
        """(dh/dx, dh/dz) of the bilinear patch containing (x, z)."""
        if not self.in_bounds(x, z):
            raise WorldBoundsError(f"({x}, {z}) outside world bounds")
        i, j, fx, fz = self._cell_fractions(x, z)
        h = self.heights
        dhdx = ((h[j, i + 1] - h[j, i]) * (1 - fz)
                + (h[j + 1, i + 1] - h[j + 1, i]) * fz) / self.cell_size
        dhdz = ((h[j + 1, i] - h[j, i]) * (1 - fx)
                + (h[j + 1, i + 1] - h[j, i + 1]) * fx) / self.cell_size
        return float(dhdx), float(dhdz)

    def surface_normal(self, x: float, z: float) -> Vec3:
        dhdx, dhdz = self.gradient_at(x, z)
        return Vec3(-dhdx, 1.0, -dhdz).normalized()

    def ground_point(self, x: float, z: float) -> Vec3:
        return Vec3(x, self.height_at(x, z), z)

    def slope_at(self, x: float, z: float) -> float:
        dhdx, dhdz = self.gradient_at(x, z)
        return math.atan(math.hypot(dhdx, dhdz))

    def inside_obstacle_footprint(self, x: float, z: float) -> bool:
        return any(ob.footprint_contains(x, z) for ob in self.obstacles)

    def is_navigable(self, point: Vec3) -> bool:
        """Walkable: in bounds, local slope within limit, outside obstacles."""
        if not self.in_bounds(point.x, point.z):
            return False
        dhdx, dhdz = self.gradient_at(point.x, point.z)
        if math.hypot(dhdx, dhdz) > self.max_slope_tan:
            return False
        return not self.inside_obstacle_footprint(point.x, point.z)

    # -- navigability grid for path planning ---------------------------------

    def nav_grid(self) -> np.ndarray:
        """Boolean [rows, cols] array: node is walkable."""
        if self._nav_grid is None:
            dz, dx = np.gradient(self.heights, self.cell_size)
            ok = np.hypot(dx, dz) <= self.max_slope_tan
            if self.obstacles:
                nx = self.heights.shape[1]
                xs = np.arange(nx) * self.cell_size
                zs = np.arange(self.heights.shape[0]) * self.cell_size
                for ob in self.obstacles:
                    x0, z0, x1, z1 = ob.footprint_bounds()
                    i0 = max(int(math.floor(x0 / self.cell_size)), 0)
                    i1 = min(int(math.ceil(x1 / self.cell_size)), nx - 1)
                    j0 = max(int(math.floor(z0 / self.cell_size)), 0)
                    j1 = min(int(math.ceil(z1 / self.cell_size)), len(zs) - 1)
                    if i0 > i1 or j0 > j1:
                        continue
                    if isinstance(ob, Box):
                        sub_x = (xs[i0:i1 + 1] >= ob.x0) & (xs[i0:i1 + 1] <= ob.x1)
                        sub_z = (zs[j0:j1 + 1] >= ob.z0) & (zs[j0:j1 + 1] <= ob.z1)
                        ok[j0:j1 + 1, i0:i1 + 1] &= ~(sub_z[:, None] & sub_x[None, :])
                    else:
                        gx, gz = np.meshgrid(xs[i0:i1 + 1], zs[j0:j1 + 1])
                        inside = (gx - ob.cx) ** 2 + (gz - ob.cz) ** 2 <= ob.radius ** 2
                        ok[j0:j1 + 1, i0:i1 + 1] &= ~inside
            self._nav_grid = ok
        return self._nav_grid

    def nav_component(self, x: float, z: float) -> int:
        """Connected-component label of the node nearest (x, z); 0 = blocked."""
        if self._nav_labels is None:
            from scipy import ndimage
            structure = np.ones((3, 3), dtype=bool)
            self._nav_labels, _ = ndimage.label(self.nav_grid(), structure=structure)
        i = int(round(x / self.cell_size))
        j = int(round(z / self.cell_size))
        i = min(max(i, 0), self.heights.shape[1] - 1)
        j = min(max(j, 0), self.heights.shape[0] - 1)
        return int(self._nav_labels[j, i])

    # -- raycasts -------------------------------------------------------------

    def _obstacle_hit(self, origin: Vec3, direction: Vec3, t_max: float):
        best = None
        for ob in self.obstacles:
            hit = ob.ray_hit(origin, direction, t_max)
            if hit is not None and (best is None or hit[0] < best[0]):
                best = hit
        return best

    def _terrain_crossing(self, origin: Vec3, direction: Vec3, t_max: float):
        """First t where the ray passes below the terrain, by marching then
        bisection to within HIT_TOLERANCE along the ray."""
        step = self.cell_size / 4.0
        ceiling = float(self.heights.max()) + 1.0

        def above(t: float) -> float:
            x = origin.x + direction.x * t
            z = origin.z + direction.z * t
            y = origin.y + direction.y * t
            return y - self.height_at(x, z)

        t = 0.0
        if not self.in_bounds(origin.x, origin.z):
            return None
        prev_t, prev_f = 0.0, above(0.0)
        if prev_f < 0.0:
            return 0.0
        while t < t_max:
            t = min(t + step, t_max)
            x = origin.x + direction.x * t
            z = origin.z + direction.z * t
            if not self.in_bounds(x, z):
                return None
            y = origin.y + direction.y * t
            if y > ceiling and direction.y >= 0.0:
                return None
            f = y - self.height_at(x, z)
            if f < 0.0:
                lo, hi = prev_t, t
                while hi - lo > HIT_TOLERANCE:
                    mid = 0.5 * (lo + hi)
                    if above(mid) < 0.0:
                        hi = mid
                    else:
                        lo = mid
                return hi
            prev_t, prev_f = t, f
        return None

    def ray_ground_intersect(self, origin: Vec3, direction: Vec3,
                             max_distance: float | None = None) -> GroundHit | None:
        """First intersection of a straight ray with terrain or an obstacle."""
        direction = direction.normalized()
        if max_distance is None:
            max_distance = 2.0 * math.hypot(self.size_x, self.size_z) + abs(origin.y) + 100.0
        t_terrain = self._terrain_crossing(origin, direction, max_distance)
        obstacle = self._obstacle_hit(origin, direction, max_distance)
        if t_terrain is None and obstacle is None:
            return None
        if obstacle is not None and (t_terrain is None or obstacle[0] < t_terrain):
            t, normal = obstacle
            point = origin + direction.scaled(t)
            return GroundHit(point=point, normal=normal, navigable=False, on_terrain=False)
        point = origin + direction.scaled(t_terrain)
        point = Vec3(point.x, self.height_at(point.x, point.z), point.z)
        return GroundHit(point=point, normal=self.surface_normal(point.x, point.z),
                         navigable=self.is_navigable(point), on_terrain=True)

    def parabolic_arc(self, origin: Vec3, direction: Vec3, v0: float = DEFAULT_LAUNCH_SPEED,
                      g: float = DEFAULT_GRAVITY) -> tuple[list[Vec3], GroundHit | None]:
        """Ballistic trajectory sampled every 10 ms until it strikes the world.

        Returns the sample polyline (ending at the refined hit point when
        there is one) and the hit. No hit inside the bounds gives None.
        """
        if v0 <= 0.0 or g <= 0.0:
            raise ValueError("launch speed and gravity must be positive")
        direction = direction.normalized()

        def pos(tau: float) -> Vec3:
            return Vec3(origin.x + v0 * direction.x * tau,
                        origin.y + v0 * direction.y * tau - 0.5 * g * tau * tau,
                        origin.z + v0 * direction.z * tau)

        floor = float(self.heights.min()) - 5.0
        tau_max = 2.0 * (v0 + math.sqrt(max(origin.y - floor, 0.0) * 2.0 * g)) / g + 1.0
        samples = [origin]
        prev = origin
        tau = 0.0
        while tau < tau_max:
            tau = min(tau + ARC_SAMPLE_DT, tau_max)
            cur = pos(tau)
            if not self.in_bounds(cur.x, cur.z) or cur.y < floor:
                return samples, None
            seg = cur - prev
            seg_len = seg.norm()
            if seg_len > 1e-12:
                seg_dir = seg.scaled(1.0 / seg_len)
                obstacle = self._obstacle_hit(prev, seg_dir, seg_len)
                crossed = cur.y < self.height_at(cur.x, cur.z)
                if crossed or obstacle is not None:
                    t_terr = None
                    if crossed:
                        lo, hi = tau - ARC_SAMPLE_DT, tau
                        while (hi - lo) * v0 > HIT_TOLERANCE:
                            mid = 0.5 * (lo + hi)
                            p = pos(mid)
                            if p.y < self.height_at(p.x, p.z):
                                hi = mid
                            else:
                                lo = mid
                        t_terr = (pos(hi) - prev).norm()
                    if obstacle is not None and (t_terr is None or obstacle[0] < t_terr):
                        point = prev + seg_dir.scaled(obstacle[0])
                        hit = GroundHit(point=point, normal=obstacle[1],
                                        navigable=False, on_terrain=False)
                    else:
                        raw = prev + seg_dir.scaled(t_terr)
                        point = Vec3(raw.x, self.height_at(raw.x, raw.z), raw.z)
                        hit = GroundHit(point=point,
                                        normal=self.surface_normal(point.x, point.z),
                                        navigable=self.is_navigable(point), on_terrain=True)
                    samples.append(hit.point)
                    return samples, hit
            samples.append(cur)
            prev = cur
        return samples, None

    def occlusion_test(self, eye: Vec3, avatar: Vec3) -> bool:
        """True when terrain or an obstacle blocks the eye-avatar segment."""
        for p in (eye, avatar):
            if not self.in_bounds(p.x, p.z):
                raise WorldBoundsError(f"({p.x}, {p.z}) outside world bounds")
        seg = avatar - eye
        length = seg.norm()
        if length < 1e-9:
            return False
        direction = seg.scaled(1.0 / length)
        # pull both ends slightly inward so endpoints touching the surface
        # do not count as occlusion
        inset = min(1e-3, 0.4 * length)
        start = eye + direction.scaled(inset)
        span = length - 2.0 * inset
        if self._obstacle_hit(start, direction, span) is not None:
            return True
        return self._terrain_crossing(start, direction, span) is not None

    # -- serialization --------------------------------------------------------

    def to_dict(self, include_heights: bool = True) -> dict:
        d: dict = {"v": WORLD_SCHEMA_VERSION, "cell_size": self.cell_size}
        if self.seed is not None:
            d["seed"] = self.seed
        if self.spec is not None:
            d["spec"] = self.spec.to_dict()
        if include_heights or self.spec is None or self.seed is None:
            d["heights"] = self.heights.tolist()
        d["obstacles"] = [ob.to_dict() for ob in self.obstacles]
        d["targets"] = [t.to_tuple() for t in self.targets]
        if self.course is not None:
            d["course"] = [p.to_tuple() for p in self.course]
        d["max_slope_deg"] = self.max_slope_deg
        return d

    def save(self, path, include_heights: bool = True) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(include_heights=include_heights), fh,
                      separators=(",", ":"))
            fh.write("\n")

    @staticmethod
    def from_dict(d: dict) -> "WorldModel":
        if "heights" in d:
            spec = WorldSpec(**d["spec"]) if "spec" in d else None
            return WorldModel(
                heights=np.array(d["heights"], dtype=np.float64),
                cell_size=d["cell_size"],
                obstacles=[obstacle_from_dict(o) for o in d.get("obstacles", [])],
                targets=[Vec3.of(t) for t in d.get("targets", [])],
                seed=d.get("seed"),
                spec=spec,
                course=[Vec3.of(p) for p in d["course"]] if d.get("course") else None,
                max_slope_deg=d.get("max_slope_deg", DEFAULT_MAX_SLOPE_DEG),
            )
        if "seed" in d and "spec" in d:
            return generate_world(d["seed"], WorldSpec(**d["spec"]))
        raise ValueError("world file needs either explicit heights or seed+spec")

    @staticmethod
    def load(path) -> "WorldModel":
        with open(path) as fh:
            return WorldModel.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Procedural generation

def _value_noise(rng: np.random.Generator, shape: tuple[int, int],
                 wavelength_cells: float, amplitude: float) -> np.ndarray:
    """Smooth lattice noise; values clipped to 2 sigma so the worst-case
    gradient stays bounded by ~6*amplitude/wavelength."""
    rows, cols = shape
    lat_r = int(math.ceil(rows / wavelength_cells)) + 2
    lat_c = int(math.ceil(cols / wavelength_cells)) + 2
    lattice = np.clip(rng.standard_normal((lat_r, lat_c)), -2.0, 2.0) * amplitude
    gz = np.arange(rows) / wavelength_cells
    gx = np.arange(cols) / wavelength_cells
    j0 = np.floor(gz).astype(int)
    i0 = np.floor(gx).astype(int)
    fz = gz - j0
    fx = gx - i0
    fz = fz * fz * (3.0 - 2.0 * fz)
    fx = fx * fx * (3.0 - 2.0 * fx)
    fz = fz[:, None]
    fx = fx[None, :]
    a = lattice[np.ix_(j0, i0)]
    b = lattice[np.ix_(j0, i0 + 1)]
    c = lattice[np.ix_(j0 + 1, i0)]
    d = lattice[np.ix_(j0 + 1, i0 + 1)]
    return (a * (1 - fx) + b * fx) * (1 - fz) + (c * (1 - fx) + d * fx) * fz


def _rounded_rect_loop(cx: float, cz: float, half_w: float, half_h: float,
                       corner_r: float, step: float) -> list[tuple[float, float]]:
    """Counterclockwise rounded-rectangle polyline sampled every ~step meters,
    starting at the middle of the south edge."""
    segs: list[tuple[float, float]] = []

    def add_line(p0, p1):
        d = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
        n = max(int(d / step), 1)
        for k in range(n):
            f = k / n
            segs.append((p0[0] + (p1[0] - p0[0]) * f, p0[1] + (p1[1] - p0[1]) * f))

    def add_arc(center, a0, a1):
        span = a1 - a0
        n = max(int(abs(span) * corner_r / step), 1)
        for k in range(n):
            a = a0 + span * k / n
            segs.append((center[0] + corner_r * math.cos(a),
                         center[1] + corner_r * math.sin(a)))

    x0, x1 = cx - half_w, cx + half_w
    z0, z1 = cz - half_h, cz + half_h
    add_line((cx, z0), (x1 - corner_r, z0))
    add_arc((x1 - corner_r, z0 + corner_r), -math.pi / 2, 0.0)
    add_line((x1, z0 + corner_r), (x1, z1 - corner_r))
    add_arc((x1 - corner_r, z1 - corner_r), 0.0, math.pi / 2)
    add_line((x1 - corner_r, z1), (x0 + corner_r, z1))
    add_arc((x0 + corner_r, z1 - corner_r), math.pi / 2, math.pi)
    add_line((x0, z1 - corner_r), (x0, z0 + corner_r))
    add_arc((x0 + corner_r, z0 + corner_r), math.pi, 1.5 * math.pi)
    add_line((x0 + corner_r, z0), (cx, z0))
    return segs


def _meander(points: list[tuple[float, float]], amplitude: float,
             wavelength: float, phase: float) -> list[tuple[float, float]]:
    """Push each point sideways by a sine of the running arc length."""
    out = []
    s = 0.0
    for k, (x, z) in enumerate(points):
        nxt = points[(k + 1) % len(points)]
        prv = points[k - 1]
        tx, tz = nxt[0] - prv[0], nxt[1] - prv[1]
        tl = math.hypot(tx, tz)
        if tl < 1e-9:
            out.append((x, z))
            continue
        # left normal of the tangent
        nx, nz = -tz / tl, tx / tl
        off = amplitude * math.sin(2.0 * math.pi * s / wavelength + phase)
        out.append((x + nx * off, z + nz * off))
        if k + 1 < len(points):
            s += math.hypot(points[k + 1][0] - x, points[k + 1][1] - z)
    return out


def _polyline_length_2d(points) -> float:
    return sum(math.hypot(points[k + 1][0] - points[k][0],
                          points[k + 1][1] - points[k][1])
               for k in range(len(points) - 1))


def _min_distance_to_polyline(x: float, z: float, pts: np.ndarray) -> float:
    return float(np.min(np.hypot(pts[:, 0] - x, pts[:, 1] - z)))


def _trim_to_length_3d(world_heights, cell_size, points_2d, length: float) -> list[Vec3]:
    """Cut the 2D polyline at the given cumulative 3D arc length, taking y
    from the heightmap. Two passes are enough to land within ~1 mm."""
    def height(x, z):
        cols = world_heights.shape[1] - 1
        rows = world_heights.shape[0] - 1
        gx = min(max(x / cell_size, 0.0), cols)
        gz = min(max(z / cell_size, 0.0), rows)
        i = min(int(gx), cols - 1)
        j = min(int(gz), rows - 1)
        fx, fz = gx - i, gz - j
        h = world_heights
        return float((h[j, i] * (1 - fx) + h[j, i + 1] * fx) * (1 - fz)
                     + (h[j + 1, i] * (1 - fx) + h[j + 1, i + 1] * fx) * fz)

    pts3 = [Vec3(x, height(x, z), z) for x, z in points_2d]
    out = [pts3[0]]
    acc = 0.0
    for k in range(1, len(pts3)):
        d = pts3[k].distance_to(pts3[k - 1])
        if acc + d >= length:
            remain = length - acc
            f = remain / d
            p = pts3[k - 1]
            q = pts3[k]
            cut = Vec3(p.x + (q.x - p.x) * f, 0.0, p.z + (q.z - p.z) * f)
            cut = Vec3(cut.x, height(cut.x, cut.z), cut.z)
            # second pass: correct for the height adjustment of the cut point
            d2 = cut.distance_to(p)
            if d2 > 1e-9 and abs(d2 - remain) > 1e-6:
                f *= remain / d2
                f = min(max(f, 0.0), 1.0)
                cut = Vec3(p.x + (q.x - p.x) * f, 0.0, p.z + (q.z - p.z) * f)
                cut = Vec3(cut.x, height(cut.x, cut.z), cut.z)
            out.append(cut)
            return out
        acc += d
        out.append(pts3[k])
    return out


def course_length(course: list[Vec3]) -> float:
    return sum(course[k + 1].distance_to(course[k]) for k in range(len(course) - 1))


def point_at_arc_length(course: list[Vec3], s: float) -> Vec3:
    acc = 0.0
    for k in range(1, len(course)):
        d = course[k].distance_to(course[k - 1])
        if acc + d >= s:
            f = (s - acc) / d if d > 1e-12 else 0.0
            p, q = course[k - 1], course[k]
            return Vec3(p.x + (q.x - p.x) * f, p.y + (q.y - p.y) * f, p.z + (q.z - p.z) * f)
        acc += d
    return course[-1]


def generate_world(seed: int, spec: WorldSpec | None = None) -> WorldModel:
    """Deterministic course world: rolling terrain, a winding path of exactly
    spec.path_length, targets spaced along it, hills and obstacles kept clear
    of the path. Same (seed, spec) always yields a bit-identical world."""
    spec = spec or WorldSpec()
    diagonal = math.hypot(spec.extent_x, spec.extent_z)
    if spec.path_length > diagonal * spec.winding_cap:
        raise WorldConfigError(
            f"path length {spec.path_length} exceeds winding capacity "
            f"{diagonal * spec.winding_cap:.1f}")
    if spec.target_count < 1:
        raise WorldConfigError("need at least one target")
    spacing = spec.target_spacing if spec.target_spacing is not None \
        else spec.path_length / spec.target_count
    if spacing * spec.target_count > spec.path_length + 1e-6:
        raise WorldConfigError("targets do not fit on the path at that spacing")

    rng = np.random.default_rng(seed)
    cols = int(round(spec.extent_x / spec.cell_size)) + 1
    rows = int(round(spec.extent_z / spec.cell_size)) + 1

    # gentle rolling base: per-octave worst-case gradients sum to ~tan(19 deg)
    heights = np.zeros((rows, cols), dtype=np.float64)
    for wavelength_m, amp in ((200.0, 4.5), (80.0, 1.2), (32.0, 0.35), (8.0, 0.06)):
        heights += _value_noise(rng, (rows, cols), wavelength_m / spec.cell_size, amp)

    # course: rounded-rectangle loop with a sine meander, later cut open at
    # the requested length
    margin = 0.12 * min(spec.extent_x, spec.extent_z)
    half_w = spec.extent_x / 2 - margin
    half_h = spec.extent_z / 2 - margin
    corner_r = min(60.0, half_w / 2, half_h / 2)
    base_step = 1.0
    loop = _rounded_rect_loop(spec.extent_x / 2, spec.extent_z / 2,
                              half_w, half_h, corner_r, base_step)
    phase = float(rng.uniform(0.0, 2.0 * math.pi))
    amp = 12.0
    wavelength = 130.0
    course_2d = _meander(loop, amp, wavelength, phase)
    while _polyline_length_2d(course_2d) < spec.path_length + 2.0:
        amp += 4.0
        if amp > wavelength / 3.0:
            raise WorldConfigError(
                f"path length {spec.path_length} does not fit the extent")
        course_2d = _meander(loop, amp, wavelength, phase)

    course_pts = np.array(course_2d)

    # hills: tall but never steeper than ~22 deg, kept away from the course
    # and from each other so gradients cannot stack past the slope limit
    placed = []
    attempts = 0
    xs = np.arange(cols) * spec.cell_size
    zs = np.arange(rows) * spec.cell_size
    gx, gz = np.meshgrid(xs, zs)
    while len(placed) < spec.hill_count and attempts < spec.hill_count * 40:
        attempts += 1
        sigma = float(rng.uniform(35.0, 70.0))
        hx = float(rng.uniform(margin / 2, spec.extent_x - margin / 2))
        hz = float(rng.uniform(margin / 2, spec.extent_z - margin / 2))
        if _min_distance_to_polyline(hx, hz, course_pts) < sigma + 30.0:
            continue
        if any(math.hypot(hx - px, hz - pz) < 2.5 * (sigma + ps)
               for px, pz, ps, _ in placed):
            continue
        amp_h = float(rng.uniform(0.5, 1.0)) * 0.33 * sigma
        placed.append((hx, hz, sigma, amp_h))
    for hx, hz, sigma, amp_h in placed:
        heights += amp_h * np.exp(-((gx - hx) ** 2 + (gz - hz) ** 2) / (2 * sigma ** 2))
    heights.setflags(write=False)

    course = _trim_to_length_3d(heights, spec.cell_size, course_2d, spec.path_length)
    actual = course_length(course)
    if abs(actual - spec.path_length) > 0.5:
        raise WorldConfigError(
            f"course length {actual:.2f} missed requested {spec.path_length}")

    targets = [point_at_arc_length(course, spacing * (k + 1))
               for k in range(spec.target_count)]

    # obstacles: tree trunks and rocks, clear of the course and the targets
    obstacles: list = []
    def clear_of_course(x: float, z: float, r: float) -> bool:
        if _min_distance_to_polyline(x, z, course_pts) < 12.0 + r:
            return False
        return all(math.hypot(x - t.x, z - t.z) > 6.0 + r for t in targets)

    def ground(x: float, z: float) -> float:
        i = min(max(int(round(x / spec.cell_size)), 0), cols - 1)
        j = min(max(int(round(z / spec.cell_size)), 0), rows - 1)
        return float(heights[j, i])

    made = 0
    attempts = 0
    while made < spec.tree_count and attempts < spec.tree_count * 20:
        attempts += 1
        x = float(rng.uniform(5.0, spec.extent_x - 5.0))
        z = float(rng.uniform(5.0, spec.extent_z - 5.0))
        r = float(rng.uniform(0.3, 0.8))
        if not clear_of_course(x, z, r):
            continue
        y0 = ground(x, z) - 1.0
        obstacles.append(Cylinder(x, z, r, y0, y0 + float(rng.uniform(4.0, 9.0))))
        made += 1
    made = 0
    attempts = 0
    while made < spec.rock_count and attempts < spec.rock_count * 20:
        attempts += 1
        x = float(rng.uniform(5.0, spec.extent_x - 5.0))
        z = float(rng.uniform(5.0, spec.extent_z - 5.0))
        sx = float(rng.uniform(1.0, 3.0))
        sz = float(rng.uniform(1.0, 3.0))
        if not clear_of_course(x, z, max(sx, sz)):
            continue
        y0 = ground(x, z) - 1.0
        h = float(rng.uniform(1.0, 3.0))
        obstacles.append(Box(x - sx, y0, z - sz, x + sx, y0 + 1.0 + h, z + sz))
        made += 1

    return WorldModel(heights=heights, cell_size=spec.cell_size, obstacles=obstacles,
                      targets=targets, seed=seed, spec=spec, course=course,
                      max_slope_deg=spec.max_slope_deg)


def flat_world(size_x: float = 100.0, size_z: float = 100.0, cell_size: float = 1.0,
               height: float = 0.0, obstacles: list | None = None,
               targets: list[Vec3] | None = None) -> WorldModel:
    """Constant-height world, the workhorse for tests and demos."""
    cols = int(round(size_x / cell_size)) + 1
    rows = int(round(size_z / cell_size)) + 1
    heights = np.full((rows, cols), float(height))
    return WorldModel(heights=heights, cell_size=cell_size,
                      obstacles=obstacles, targets=targets)
