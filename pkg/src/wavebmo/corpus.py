"""Deterministic test corpora: functions for the analysis side, arrays for synthesis.

Functions are kept as closed-form callables so the same case can be resampled
on finer grids.  Coefficient arrays draw their values from a counter-based
hash of ``(seed, scale, position)``; extending an array to finer scales
therefore never changes the coefficients it already had.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dyadic import DyadicInterval, Grid, GridFunction, Interval, VectorSpace, SCALAR, pow2
from .norms import CoefficientArray
from .wavelets import WaveletModel, _splitmix

__all__ = [
    "FunctionCase",
    "ArrayCase",
    "hashed_uniform",
    "step_function",
    "wavelet_sum",
    "log_profile",
    "cumulative_haar",
    "haar_bump",
    "constant_function",
    "function_corpus",
    "decaying_array",
    "single_coefficient",
    "array_corpus",
]


@dataclass(frozen=True, eq=False)
class FunctionCase:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    dim: int = 1
    meta: dict = field(default_factory=dict)

    def sample(self, grid: Grid, space: VectorSpace = SCALAR) -> GridFunction:
        vals = np.asarray(self.fn(grid.midpoints()), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[1] != space.dim:
            raise ValueError(f"case {self.name} has dimension {vals.shape[1]}, space has {space.dim}")
        return GridFunction(grid, vals, space)


@dataclass(frozen=True, eq=False)
class ArrayCase:
    """Coefficient generator: ``build(min_scale)`` returns the array truncated at ``min_scale``."""

    name: str
    build: Callable[[int], CoefficientArray]
    meta: dict = field(default_factory=dict)


def hashed_uniform(seed: int, j: int, ks: np.ndarray, stream: int = 0) -> np.ndarray:
    """Uniform ``[0, 1)`` numbers indexed by ``(seed, j, k, stream)``."""
    ks = np.asarray(ks, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        x = np.uint64(seed & 0xFFFFFFFF) * np.uint64(0x9E3779B97F4A7C15)
        x = _splitmix(x ^ np.uint64((j + 1024) * 0x100000001B3 + stream * 0x51ED27))
        h = _splitmix(x + ks * np.uint64(0xD1B54A32D192ED03))
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _components(rng: np.random.Generator, dim: int, fn_of_rng):
    parts = [fn_of_rng(rng) for _ in range(dim)]
    if dim == 1:
        return parts[0]
    return lambda x: np.stack([p(x) for p in parts], axis=-1)


def step_function(rng: np.random.Generator, region: Interval, scale: int, dim: int = 1) -> FunctionCase:
    """Random values on the dyadic cells of ``scale`` inside ``region``; zero outside."""
    size = float(pow2(scale))
    k0 = math.ceil(region.left / pow2(scale))
    n = int(region.length / pow2(scale))

    def one(r):
        vals = r.normal(size=n)

        def fn(x):
            k = np.floor(np.asarray(x) / size).astype(np.int64) - k0
            inside = (k >= 0) & (k < n)
            return np.where(inside, vals[np.clip(k, 0, n - 1)], 0.0)
        return fn
    return FunctionCase(f"step[{scale}]", _components(rng, dim, one), dim, {"scale": scale})


def wavelet_sum(rng: np.random.Generator, psi: WaveletModel, region: Interval, scales: range,
                terms: int, dim: int = 1) -> FunctionCase:
    """``sum c_J psi_J`` over ``terms`` random dyadic ``J`` inside ``region``."""
    def one(r):
        picks = []
        for _ in range(terms):
            j = int(r.integers(scales.start, scales.stop))
            k0 = math.ceil(region.left / pow2(j))
            k1 = math.floor(region.right / pow2(j))
            picks.append((DyadicInterval(j, int(r.integers(k0, k1))), float(r.normal())))

        def fn(x):
            return sum(c * psi.psi_J(J, x) for J, c in picks)
        return fn
    return FunctionCase("wavelet-sum", _components(rng, dim, one), dim, {"terms": terms})


def log_profile(centre: float, amplitude: float = 1.0, dim: int = 1) -> FunctionCase:
    """``amplitude * log|x - centre|``."""
    def fn(x):
        v = amplitude * np.log(np.abs(np.asarray(x) - centre))
        return v if dim == 1 else np.repeat(v[:, None], dim, axis=1)
    return FunctionCase(f"log[{centre}]", fn, dim, {"centre": centre})


def cumulative_haar(centre: float, depth: int, dim: int = 1) -> FunctionCase:
    """``sum_{k < depth} 1_[c, c + 2^-k)``: a one-sided staircase like ``-log2``."""
    def fn(x):
        t = np.asarray(x) - centre
        v = np.zeros_like(t)
        for k in range(depth):
            v += (t >= 0) & (t < 2.0 ** -k)
        return v if dim == 1 else np.repeat(v[:, None], dim, axis=1)
    return FunctionCase(f"staircase[{centre}]", fn, dim, {"depth": depth})


def haar_bump(J: DyadicInterval, dim: int = 1) -> FunctionCase:
    """``+1`` on the left half of ``J``, ``-1`` on the right half."""
    a, m, b = float(J.left), float(J.left + J.length / 2), float(J.right)

    def fn(x):
        x = np.asarray(x)
        v = np.where((x >= a) & (x < m), 1.0, 0.0) - np.where((x >= m) & (x < b), 1.0, 0.0)
        return v if dim == 1 else np.repeat(v[:, None], dim, axis=1)
    return FunctionCase(f"haar[{J}]", fn, dim)


def constant_function(value: float = 1.0, dim: int = 1) -> FunctionCase:
    return FunctionCase("constant", lambda x: np.full((np.size(x),) if dim == 1 else (np.size(x), dim), value),
                        dim)


def function_corpus(seed: int, psi: WaveletModel, n_steps: int = 6, n_sums: int = 4,
                    region: Interval | None = None, dim: int = 1) -> list[FunctionCase]:
    """The analysis-side corpus: steps, wavelet sums, logarithmic profiles, a constant."""
    region = region or Interval(-4, 4)
    rng = np.random.default_rng(seed)
    out = [constant_function(1.0, dim), haar_bump(DyadicInterval(0, 0), dim),
           log_profile(0.0, 1.0, dim), log_profile(0.75, 0.5, dim), cumulative_haar(-0.5, 8, dim)]
    for i in range(n_steps):
        out.append(step_function(rng, region, int(rng.integers(-3, 1)), dim))
    for i in range(n_sums):
        out.append(wavelet_sum(rng, psi, region, range(-4, 0), 6, dim))
    return out


def decaying_array(seed: int, region: Interval, max_scale: int, decay: float = 0.5,
                   density: float = 1.0, space: VectorSpace = SCALAR) -> ArrayCase:
    """``a_J = s_J |J|^(1/2) decay^(max_scale - j)`` on dyadic ``J`` in ``region``.

    ``s_J`` are hashed normals per component; with ``density < 1`` a hashed
    coin drops each ``J`` independently.
    """
    def build(min_scale: int) -> CoefficientArray:
        rows = {}
        for j in range(max_scale, min_scale - 1, -1):
            k0 = math.ceil(region.left / pow2(j))
            k1 = math.floor(region.right / pow2(j))
            if k1 <= k0:
                continue
            ks = np.arange(k0, k1)
            vals = np.empty((ks.size, space.dim))
            for c in range(space.dim):
                u1 = hashed_uniform(seed, j, ks, 2 * c)
                u2 = hashed_uniform(seed, j, ks, 2 * c + 1)
                vals[:, c] = np.sqrt(-2 * np.log1p(-u1)) * np.cos(2 * np.pi * u2)
            if density < 1:
                vals[hashed_uniform(seed, j, ks, 999) >= density] = 0.0
            rows[j] = (k0, vals * 2.0 ** (j / 2) * decay ** (max_scale - j))
        return CoefficientArray.from_rows(rows, space, {"kind": "synthetic", "seed": seed})
    return ArrayCase(f"decaying[{seed}]", build, {"seed": seed, "decay": decay, "density": density})


def single_coefficient(J: DyadicInterval, value=1.0, space: VectorSpace = SCALAR) -> ArrayCase:
    v = np.broadcast_to(np.asarray(value, dtype=float), (space.dim,))
    return ArrayCase(f"single[{J}]", lambda min_scale: CoefficientArray.from_dict({J: v}, space),
                     {"J": [J.scale, J.position]})


def array_corpus(seed: int, n_random: int = 6, region: Interval | None = None,
                 space: VectorSpace = SCALAR) -> list[ArrayCase]:
    """Synthesis-side corpus: dense and sparse decaying arrays plus single coefficients."""
    region = region or Interval(-2, 2)
    out = [single_coefficient(DyadicInterval(j, 0), 1.0, space) for j in (-3, -1, 0)]
    for i in range(n_random):
        density = 1.0 if i % 2 == 0 else 0.3
        decay = 0.5 if i % 3 else 0.7
        out.append(decaying_array(seed * 1000 + i, region, 0, decay, density, space))
    return out
