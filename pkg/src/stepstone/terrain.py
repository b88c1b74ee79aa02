"""Stepping-stone terrain: randomized generation, planner simplification, queries.

Stones are axis-aligned rectangles with planar (possibly tilted) tops,
laid out along +x on the robot's sagittal line.  The random generator is
a self-contained xorshift64* stream so terrain suites reproduce exactly
from a seed, independent of any library RNG.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


class InvalidSpecError(ValueError):
    pass


@dataclass(frozen=True)
class Stone:
    """center (x, y), top height, half extents (x, y), tilt (about x, about y).

    The top surface is the plane
        z(x, y) = top_height + tan(tilt_y) * (x - cx) + tan(tilt_x) * (y - cy).
    """

    center: tuple
    top_height: float
    half_extents: tuple
    tilt: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "half_extents", (float(self.half_extents[0]), float(self.half_extents[1])))
        object.__setattr__(self, "tilt", (float(self.tilt[0]), float(self.tilt[1])))
        if self.half_extents[0] <= 0 or self.half_extents[1] <= 0:
            raise InvalidSpecError("stone half_extents must be positive")
        if abs(self.tilt[0]) > 0.3 or abs(self.tilt[1]) > 0.3:
            raise InvalidSpecError("stone tilt must be within +-0.3 rad")

    def contains(self, point) -> bool:
        return (
            abs(point[0] - self.center[0]) <= self.half_extents[0] + 1e-12
            and abs(point[1] - self.center[1]) <= self.half_extents[1] + 1e-12
        )

    def surface_height(self, point) -> float:
        dx = point[0] - self.center[0]
        dy = point[1] - self.center[1]
        return self.top_height + np.tan(self.tilt[1]) * dx + np.tan(self.tilt[0]) * dy


@dataclass
class StoneMap:
    stones: list
    ground_height: float = 0.0

    def __post_init__(self):
        xs = [s.center[0] for s in self.stones]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise InvalidSpecError("stones must be ordered by strictly increasing center x")

    def __len__(self):
        return len(self.stones)

    def gaps(self) -> np.ndarray:
        """Center-to-center x distances between consecutive stones."""
        xs = np.array([s.center[0] for s in self.stones])
        return np.diff(xs)


@dataclass
class TerrainSpec:
    """Randomized stepping-stone layout parameters (SI units).

    Width perturbation shrinks stones from the nominal width, so
    footprints stay disjoint whenever
    nominal_width - width_perturbation_range[0] < gap_range[0].
    """

    stone_count: int = 5
    gap_range: tuple = (0.15, 0.30)
    width_perturbation_range: tuple = (0.04, 0.10)
    height_perturbation_max: float = 0.05
    tilt_max: float = 0.1
    seed: int = 0
    nominal_width: float = 0.18
    lateral_half_extent: float = 0.5
    ground_height: float = 0.0
    start_x: float = 0.0

    def validate(self):
        if self.stone_count <= 0:
            raise InvalidSpecError("stone_count must be positive")
        if not (0 <= self.gap_range[0] <= self.gap_range[1]):
            raise InvalidSpecError("gap_range must be nonnegative and ordered")
        if not (0 <= self.width_perturbation_range[0] <= self.width_perturbation_range[1]):
            raise InvalidSpecError("width_perturbation_range must be nonnegative and ordered")
        if self.height_perturbation_max < 0:
            raise InvalidSpecError("height_perturbation_max must be nonnegative")
        if not (0 <= self.tilt_max <= 0.3):
            raise InvalidSpecError("tilt_max must lie in [0, 0.3] rad")
        if self.nominal_width - self.width_perturbation_range[1] <= 0.02:
            raise InvalidSpecError("nominal_width too small for the width perturbation range")
        if self.stone_count > 1 and self.nominal_width - self.width_perturbation_range[0] >= self.gap_range[0]:
            raise InvalidSpecError("widest stone would overlap the smallest gap")


class Xorshift64Star:
    """xorshift64* PRNG: x ^= x>>12; x ^= x<<25; x ^= x>>27; return x * M >> 32.

    Documented here so other implementations can reproduce terrain suites
    bit-for-bit from a seed.
    """

    MULT = 0x2545F4914F6CDD1D
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = (int(seed) & self.MASK) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= (x >> 12)
        x ^= (x << 25) & self.MASK
        x ^= (x >> 27)
        self.state = x
        return (x * self.MULT) & self.MASK

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + (hi - lo) * u


def generate(spec: TerrainSpec) -> StoneMap:
    """Randomized stone map; deterministic in spec.seed, draws within ranges."""
    spec.validate()
    rng = Xorshift64Star(spec.seed ^ 0xD1F3A5C97B2E4680)
    stones = []
    x = spec.start_x
    for i in range(spec.stone_count):
        if i > 0:
            x += rng.uniform(*spec.gap_range)
        width = spec.nominal_width - rng.uniform(*spec.width_perturbation_range)
        dh = rng.uniform(-spec.height_perturbation_max, spec.height_perturbation_max)
        tilt = (
            rng.uniform(-spec.tilt_max, spec.tilt_max),
            rng.uniform(-spec.tilt_max, spec.tilt_max),
        )
        stones.append(
            Stone(
                center=(x, 0.0),
                top_height=spec.ground_height + dh,
                half_extents=(width / 2.0, spec.lateral_half_extent),
                tilt=tilt,
            )
        )
    return StoneMap(stones=stones, ground_height=spec.ground_height)


def simplify(stone_map: StoneMap, uniform_width: float) -> StoneMap:
    """Planner view: uniform widths, nominal height, flat tops; centers kept."""
    stones = [
        replace(
            s,
            top_height=stone_map.ground_height,
            half_extents=(uniform_width / 2.0, s.half_extents[1]),
            tilt=(0.0, 0.0),
        )
        for s in stone_map.stones
    ]
    return StoneMap(stones=stones, ground_height=stone_map.ground_height)


def stone_under(stone_map: StoneMap, point) -> Optional[tuple]:
    """(stone index, surface height at point) for the stone whose footprint
    contains the x-y point; None when the point lies in a gap."""
    for i, s in enumerate(stone_map.stones):
        if s.contains(point):
            return i, s.surface_height(point)
    return None


# -- text serialization ------------------------------------------------------

_HEADER = "# stepstone stone map v1"


def dump_map(stone_map: StoneMap) -> str:
    out = io.StringIO()
    out.write(_HEADER + "\n")
    out.write(f"# ground_height {stone_map.ground_height!r}\n")
    out.write("# columns: x y z hx hy tx ty\n")
    for s in stone_map.stones:
        out.write(
            f"{s.center[0]!r} {s.center[1]!r} {s.top_height!r} "
            f"{s.half_extents[0]!r} {s.half_extents[1]!r} {s.tilt[0]!r} {s.tilt[1]!r}\n"
        )
    return out.getvalue()


def load_map(text: str) -> StoneMap:
    ground = 0.0
    stones = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "ground_height":
                ground = float(parts[1])
            continue
        vals = [float(v) for v in line.split()]
        if len(vals) != 7:
            raise InvalidSpecError(f"stone line must have 7 values: {line!r}")
        stones.append(
            Stone(
                center=(vals[0], vals[1]),
                top_height=vals[2],
                half_extents=(vals[3], vals[4]),
                tilt=(vals[5], vals[6]),
            )
        )
    if not stones:
        raise InvalidSpecError("stone map file contains no stones")
    return StoneMap(stones=stones, ground_height=ground)


def save_map(stone_map: StoneMap, path):
    with open(path, "w") as f:
        f.write(dump_map(stone_map))


def read_map(path) -> StoneMap:
    with open(path) as f:
        return load_map(f.read())
