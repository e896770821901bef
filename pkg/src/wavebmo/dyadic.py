"""Dyadic intervals, grid-aligned intervals and sampled vector-valued functions.

Everything in the package lives on a finite window sampled at the midpoints of
cells of length ``2**-level``.  Interval endpoints are exact rationals
(:class:`fractions.Fraction`), so containment and alignment questions never
depend on floating point.  Integrals are midpoint sums of the stored samples.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import DegenerateWeightError, DomainError

__all__ = [
    "DyadicInterval",
    "Interval",
    "VectorSpace",
    "Grid",
    "GridFunction",
    "dyadics_within",
    "average",
    "integrate_norm",
    "write_gridfunction",
    "read_gridfunction",
    "interval_family",
    "dyadic_family",
    "unique_intervals",
    "pow2",
    "SCALAR",
]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x)  # exact binary value
    return Fraction(x)


def pow2(j: int) -> Fraction:
    """Exact ``2**j`` for any integer ``j``."""
    return Fraction(2) ** j


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """``2**scale * [position, position + 1)``."""

    scale: int
    position: int

    @property
    def length(self) -> Fraction:
        return pow2(self.scale)

    @property
    def left(self) -> Fraction:
        return pow2(self.scale) * self.position

    @property
    def right(self) -> Fraction:
        return pow2(self.scale) * (self.position + 1)

    def interval(self) -> "Interval":
        return Interval(self.left, self.right)

    def contains(self, other: "DyadicInterval") -> bool:
        """Exact test for ``other`` being a subset of ``self``."""
        if other.scale > self.scale:
            return False
        return other.position >> (self.scale - other.scale) == self.position

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (DyadicInterval(self.scale - 1, 2 * self.position),
                DyadicInterval(self.scale - 1, 2 * self.position + 1))

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.scale + 1, self.position >> 1)

    def __str__(self) -> str:
        return f"[{self.left}, {self.right})"


@dataclass(frozen=True)
class Interval:
    """Half-open interval ``[left, right)`` with rational endpoints."""

    left: Fraction
    right: Fraction

    def __post_init__(self):
        object.__setattr__(self, "left", _frac(self.left))
        object.__setattr__(self, "right", _frac(self.right))
        if not self.left < self.right:
            raise DomainError(f"empty interval [{self.left}, {self.right})")

    @classmethod
    def from_dyadic(cls, J: DyadicInterval) -> "Interval":
        return cls(J.left, J.right)

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    @property
    def centre(self) -> Fraction:
        return (self.left + self.right) / 2

    def dilate(self, factor) -> "Interval":
        """Concentric interval ``factor`` times as long."""
        half = self.length * _frac(factor) / 2
        c = self.centre
        return Interval(c - half, c + half)

    def contains(self, other: "Interval | DyadicInterval") -> bool:
        return self.left <= other.left and other.right <= self.right

    def intersects(self, other: "Interval | DyadicInterval") -> bool:
        return self.left < other.right and other.left < self.right

    def distance(self, other: "Interval | DyadicInterval") -> Fraction:
        if self.intersects(other):
            return Fraction(0)
        return max(other.left - self.right, self.left - other.right)

    def is_dyadic(self) -> bool:
        n, d = self.length.numerator, self.length.denominator
        if n & (n - 1) or d & (d - 1):
            return False
        return (self.left / self.length).denominator == 1

    def as_dyadic(self) -> DyadicInterval:
        if not self.is_dyadic():
            raise DomainError(f"{self} is not dyadic")
        n, d = self.length.numerator, self.length.denominator
        scale = n.bit_length() - d.bit_length()
        return DyadicInterval(scale, int(self.left / self.length))

    def __str__(self) -> str:
        return f"[{self.left}, {self.right})"

    def __repr__(self) -> str:
        return f"Interval({self.left}, {self.right})"


@dataclass(frozen=True)
class VectorSpace:
    """``R^dim`` with the l^r norm; the finite-dimensional stand-in for X."""

    dim: int = 1
    r: float = 2.0

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dimension must be positive")
        if not 1.0 < self.r < math.inf:
            raise DomainError("exponent r must lie in (1, inf)")

    def norm(self, x: np.ndarray, axis: int = -1) -> np.ndarray:
        x = np.abs(np.asarray(x, dtype=float))
        if x.shape[axis] == 1:
            return np.squeeze(x, axis=axis)
        if self.r == 2.0:
            return np.sqrt(np.sum(x * x, axis=axis))
        return np.sum(x ** self.r, axis=axis) ** (1.0 / self.r)


SCALAR = VectorSpace(1, 2.0)


def largest_scale_within(length: Fraction) -> int:
    """Largest ``j`` with ``2**j <= length``."""
    n, d = length.numerator, length.denominator
    j = n.bit_length() - d.bit_length()
    if pow2(j) > length:
        j -= 1
    elif pow2(j + 1) <= length:
        j += 1
    return j


def dyadics_within(I: Interval, min_scale: int) -> list[DyadicInterval]:
    """All dyadic ``J`` contained in ``I`` with ``|J| >= 2**min_scale``.

    Ordered by scale (descending), then position (ascending).
    """
    out = []
    for j in range(largest_scale_within(I.length), min_scale - 1, -1):
        size = pow2(j)
        k0 = math.ceil(I.left / size)
        k1 = math.floor(I.right / size)
        out.extend(DyadicInterval(j, k) for k in range(k0, k1))
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform grid of cells of length ``2**-level`` covering ``window``."""

    window: Interval
    level: int

    def __post_init__(self):
        n = self.window.length / self.step_exact
        if n.denominator != 1 or (self.window.left / self.step_exact).denominator != 1:
            raise DomainError("window is not aligned with the grid step")

    @classmethod
    def symmetric(cls, M: int, L: int) -> "Grid":
        """The window ``[-2**M, 2**M)`` at resolution ``2**-L``."""
        return cls(Interval(-pow2(M), pow2(M)), L)

    @property
    def step_exact(self) -> Fraction:
        return pow2(-self.level)

    @property
    def step(self) -> float:
        return 2.0 ** -self.level

    @property
    def size(self) -> int:
        return int(self.window.length / self.step_exact)

    def midpoints(self) -> np.ndarray:
        return float(self.window.left) + (np.arange(self.size) + 0.5) * self.step

    def index_range(self, I: Interval | DyadicInterval) -> tuple[int, int]:
        """Sample indices ``[i0, i1)`` covering ``I``; ``I`` must be aligned and inside."""
        if not self.window.contains(I):
            raise DomainError(f"{I} is not inside the window {self.window}")
        a = (I.left - self.window.left) / self.step_exact
        b = (I.right - self.window.left) / self.step_exact
        if a.denominator != 1 or b.denominator != 1:
            raise DomainError(f"{I} is not aligned with the grid step 2^-{self.level}")
        return int(a), int(b)

    def is_aligned(self, I: Interval | DyadicInterval) -> bool:
        try:
            self.index_range(I)
        except DomainError:
            return False
        return True

    def refine(self, extra: int = 1) -> "Grid":
        return Grid(self.window, self.level + extra)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Vector-valued samples at the cell midpoints of a :class:`Grid`.

    ``samples`` has shape ``(grid.size, space.dim)``.
    """

    grid: Grid
    samples: np.ndarray
    space: VectorSpace = SCALAR

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.shape != (self.grid.size, self.space.dim):
            raise DomainError(
                f"samples have shape {s.shape}, expected {(self.grid.size, self.space.dim)}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray],
                      space: VectorSpace = SCALAR) -> "GridFunction":
        values = np.asarray(fn(grid.midpoints()), dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[1] == 1 and space.dim > 1:
            values = np.repeat(values, space.dim, axis=1)
        return cls(grid, values, space)

    @classmethod
    def constant(cls, grid: Grid, value, space: VectorSpace | None = None) -> "GridFunction":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        space = space or VectorSpace(value.size, 2.0)
        return cls(grid, np.tile(value, (grid.size, 1)), space)

    def norms(self) -> np.ndarray:
        return self.space.norm(self.samples)

    def restrict(self, I: Interval) -> np.ndarray:
        i0, i1 = self.grid.index_range(I)
        return self.samples[i0:i1]

    def with_samples(self, samples: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, samples, self.space)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, c: float) -> "GridFunction":
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__


def average(f: GridFunction, I: Interval) -> np.ndarray:
    """Mean value of ``f`` over ``I`` (a ``dim``-vector)."""
    return f.restrict(I).mean(axis=0)


def integrate_norm(f: GridFunction, I: Interval, p: float = 1.0,
                   density: GridFunction | None = None) -> float:
    """Midpoint sum of ``||f(x)||^p * density(x)`` over ``I``."""
    if p < 1:
        raise DomainError("power must be >= 1")
    vals = f.space.norm(f.restrict(I)) ** p
    if density is not None:
        g = density.restrict(I)[:, 0]
        if np.any(g < 0):
            raise DegenerateWeightError("density has negative samples")
        vals = vals * g
    return float(np.sum(vals) * f.grid.step)


# -- serialization ----------------------------------------------------------

_MAGIC = b"WBMOGF1\n"


def _header(f: GridFunction) -> dict:
    w = f.grid.window
    return {"left": str(w.left), "right": str(w.right), "level": f.grid.level,
            "dim": f.space.dim, "r": repr(float(f.space.r))}


def _from_header(h: dict) -> tuple[Grid, VectorSpace]:
    grid = Grid(Interval(Fraction(h["left"]), Fraction(h["right"])), int(h["level"]))
    return grid, VectorSpace(int(h["dim"]), float(h["r"]))


def write_gridfunction(path, f: GridFunction, fmt: str = "binary") -> None:
    """Write ``f`` as a binary blob (``fmt='binary'``) or as CSV.

    Both layouts carry a header (window, level, dim, r) followed by the
    samples in row-major order, and both round-trip bit-exactly.
    """
    path = Path(path)
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(json.dumps(_header(f)).encode() + b"\n")
            fh.write(np.ascontiguousarray(f.samples, dtype="<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(_header(f)) + "\n")
            writer = csv.writer(fh)
            for row in f.samples:
                writer.writerow([repr(float(v)) for v in row])
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_gridfunction(path) -> GridFunction:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(_MAGIC))
        if head == _MAGIC:
            grid, space = _from_header(json.loads(fh.readline()))
            data = np.frombuffer(fh.read(), dtype="<f8").reshape(grid.size, space.dim)
            return GridFunction(grid, data.astype(float), space)
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path} is not a grid function file")
        grid, space = _from_header(json.loads(first[2:]))
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return GridFunction(grid, np.array(rows, dtype=float).reshape(grid.size, space.dim), space)


def interval_family(window: Interval, points: int) -> list[Interval]:
    """All intervals whose endpoints lie on ``points + 1`` equispaced nodes of ``window``."""
    h = window.length / points
    nodes = [window.left + i * h for i in range(points + 1)]
    return [Interval(nodes[a], nodes[b]) for a in range(points) for b in range(a + 1, points + 1)]


def dyadic_family(window: Interval, min_scale: int, max_scale: int | None = None,
                  include_window: bool = True) -> list[Interval]:
    """Dyadic intervals inside ``window`` (as :class:`Interval`), optionally with the window."""
    out = [J.interval() for J in dyadics_within(window, min_scale)
           if max_scale is None or J.scale <= max_scale]
    if include_window and window not in out:
        out.append(window)
    return out


def unique_intervals(items: Iterable[Interval]) -> list[Interval]:
    seen, out = set(), []
    for I in items:
        key = (I.left, I.right)
        if key not in seen:
            seen.add(key)
            out.append(I)
    return out
