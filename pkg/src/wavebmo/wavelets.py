"""Orthonormal wavelets on the working grid.

Scaling functions and wavelets are tabulated at the dyadic points
``lo + i 2**-level`` of their support.  Integer values come from the
eigenvector of the refinement matrix; every finer level follows from the
two-scale relation ``phi(x) = sqrt(2) sum_k h_k phi(2x - k)``, so the table
values are exact up to rounding.  Haar is the order-1 member of the family.

Convention: ``psi(x) = sqrt(2) sum_k (-1)**k h_(1-k) phi(2x - k)``, supported
on ``[1 - N, N]`` for order ``N``; for Haar this is ``+1`` on ``[0, 1/2)`` and
``-1`` on ``[1/2, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dyadic import DyadicInterval, Grid, GridFunction, Interval, dyadics_within, pow2
from .errors import DomainError, PreconditionError, ResolutionError

__all__ = [
    "daubechies_filter",
    "WaveletModel",
    "dilate_translate",
    "coefficient",
    "wavelet_coefficients",
    "psi_class_check",
    "orthonormality_residual",
    "KernelSpec",
    "kernel_value",
    "kernel_size_check",
    "random_sign_coefficients",
]


@lru_cache(maxsize=None)
def daubechies_filter(order: int) -> tuple[float, ...]:
    """Low-pass filter of the extremal-phase Daubechies wavelet with ``order`` vanishing moments.

    Spectral factorization of ``P(y) = sum_k C(N-1+k, k) y**k``; roots inside
    the unit circle are kept.  Normalized to ``sum h = sqrt(2)``.
    """
    if order < 1:
        raise DomainError("order must be >= 1")
    N = order
    P = [math.comb(N - 1 + k, k) for k in range(N)]
    zs = []
    if N > 1:
        for y in np.roots(P[::-1]):
            # y = (2 - z - 1/z)/4  <=>  z**2 - (2 - 4y) z + 1 = 0
            z1, z2 = np.roots([1.0, -(2 - 4 * y), 1.0])
            zs.append(z1 if abs(z1) < 1 else z2)
    poly = np.array([1.0 + 0j])
    for z in zs:
        poly = np.convolve(poly, [1.0, -z])
    for _ in range(N):
        poly = np.convolve(poly, [1.0, 1.0])
    h = np.real(poly)
    h = h * (math.sqrt(2) / h.sum())
    if h[0] < abs(h[-1]):
        h = h[::-1]
    return tuple(float(v) for v in h)


def _scaling_tables(h: np.ndarray, level: int) -> list[np.ndarray]:
    """``phi`` at ``i 2**-l``, ``i = 0..(2N-1) 2**l``, for ``l = 0..level``."""
    n = len(h)  # 2N
    last = n - 1
    if n == 2:
        base = np.array([1.0, 0.0])
    else:
        M = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                k = 2 * i - j
                if 0 <= k < n:
                    M[i, j] = math.sqrt(2) * h[k]
        # (M - I) v = 0 with sum(v) = 1, endpoints zero
        A = np.vstack([M - np.eye(n), np.ones((1, n))])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        base = np.linalg.lstsq(A, b, rcond=None)[0]
        base[0] = base[-1] = 0.0
    tables = [base]
    for l in range(1, level + 1):
        prev = tables[-1]
        cur = np.zeros(last * 2 ** l + 1)
        half = 2 ** (l - 1)
        for k, hk in enumerate(h):
            lo = k * half
            # cur[i] += sqrt2 h_k prev[i - k*half]
            seg = prev[: cur.size - lo]
            cur[lo: lo + seg.size] += math.sqrt(2) * hk * seg
        tables.append(cur)
    return tables


@dataclass(frozen=True, eq=False)
class WaveletModel:
    """Tabulated scaling function ``phi`` and wavelet ``psi``.

    ``phi_table[i] = phi(phi_lo + i 2**-level)`` and likewise for ``psi``.
    Haar is flagged ``piecewise_constant`` and evaluated without interpolation.
    """

    kind: str
    order: int
    level: int
    phi_lo: float
    phi_table: np.ndarray
    psi_lo: float
    psi_table: np.ndarray
    piecewise_constant: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def daubechies(cls, order: int, level: int = 16) -> "WaveletModel":
        if order == 1:
            return cls.haar(level)
        h = np.array(daubechies_filter(order))
        N = order
        phis = _scaling_tables(h, level)
        phi = phis[level]
        coarse = phis[level - 1]
        # psi(x) = sqrt2 sum_k g_k phi(2x - k), g_k = (-1)^k h_{1-k}, k = 2-2N .. 1
        psi = np.zeros((2 * N - 1) * 2 ** level + 1)
        half = 2 ** (level - 1)
        idx = np.arange(psi.size)
        for k in range(2 - 2 * N, 2):
            gk = (-1) ** k * h[1 - k]
            src = (2 * (1 - N) - k) * half + idx
            ok = (src >= 0) & (src < coarse.size)
            psi[ok] += math.sqrt(2) * gk * coarse[src[ok]]
        return cls("daubechies", order, level, 0.0, phi, float(1 - N), psi)

    @classmethod
    def haar(cls, level: int = 16) -> "WaveletModel":
        # exact +-1 tables; the recursion would compound the rounding of sqrt2 * h_k
        n = 2 ** level
        phi = np.concatenate([np.ones(n), [0.0]])
        psi = np.concatenate([np.ones(n // 2), -np.ones(n // 2), [0.0]])
        return cls("haar", 1, level, 0.0, phi, 0.0, psi, piecewise_constant=True)

    @classmethod
    def from_spec(cls, spec: dict, level: int = 16) -> "WaveletModel":
        kind = spec.get("kind", "daubechies")
        if kind == "haar":
            return cls.haar(level)
        if kind == "daubechies":
            return cls.daubechies(int(spec.get("order", 4)), level)
        raise DomainError(f"unknown wavelet kind {kind!r}")

    def spec(self) -> dict:
        return {"kind": self.kind} if self.kind == "haar" else {"kind": self.kind, "order": self.order}

    @property
    def satisfies_hypotheses(self) -> bool:
        """Whether the wavelet is C^1 with compact support (Daubechies order >= 3)."""
        return self.kind == "daubechies" and self.order >= 3

    @property
    def psi_support(self) -> tuple[float, float]:
        return self.psi_lo, self.psi_lo + (self.psi_table.size - 1) * 2.0 ** -self.level

    @property
    def phi_support(self) -> tuple[float, float]:
        return self.phi_lo, self.phi_lo + (self.phi_table.size - 1) * 2.0 ** -self.level

    def _eval(self, table: np.ndarray, lo: float, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = (x - lo) * 2.0 ** self.level
        i = np.floor(t)
        frac = t - i
        i = i.astype(np.int64)
        n = table.size
        inside = (i >= 0) & (i < n)
        ic = np.clip(i, 0, n - 1)
        left = np.where(inside, table[ic], 0.0)
        if self.piecewise_constant:
            return left
        right = np.where((i + 1 >= 0) & (i + 1 < n), table[np.clip(i + 1, 0, n - 1)], 0.0)
        return np.where(frac == 0.0, left, left + frac * (right - left))

    def psi(self, x) -> np.ndarray:
        """Mother wavelet; exact on the table, linear (Haar: constant) in between."""
        return self._eval(self.psi_table, self.psi_lo, x)

    def phi(self, x) -> np.ndarray:
        return self._eval(self.phi_table, self.phi_lo, x)

    def psi_J(self, J: DyadicInterval, x) -> np.ndarray:
        """``|J|**-1/2 psi((x - inf J) / |J|)``."""
        size = 2.0 ** J.scale
        return self.psi((np.asarray(x, dtype=float) - float(J.left)) / size) * 2.0 ** (-J.scale / 2)

    def support_of(self, J: DyadicInterval) -> tuple[float, float]:
        size = 2.0 ** J.scale
        lo, hi = self.psi_support
        return float(J.left) + lo * size, float(J.left) + hi * size

    def template(self, J_scale: int, grid_level: int) -> tuple[int, np.ndarray]:
        """Samples of ``psi_J`` at grid midpoints relative to ``inf J``.

        Returns ``(offset, values)``: ``values[n]`` is ``psi_J`` at the midpoint of
        the cell ``offset + n`` cells to the right of ``inf J``.
        """
        key = (J_scale, grid_level)
        if key not in self._cache:
            per = 2 ** (J_scale + grid_level)  # cells per |J|
            lo, hi = self.psi_support
            n0 = math.floor(lo * per)
            n1 = math.ceil(hi * per)
            n = np.arange(n0, n1)
            vals = self.psi((n + 0.5) / per) * 2.0 ** (-J_scale / 2)
            vals.setflags(write=False)
            self._cache[key] = (n0, vals)
        return self._cache[key]


def _check_resolvable(J: DyadicInterval, grid: Grid) -> None:
    if J.scale < -grid.level:
        raise ResolutionError(f"|J| = 2^{J.scale} is below the grid step 2^-{grid.level}")


def dilate_translate(psi: WaveletModel, J: DyadicInterval, grid: Grid) -> GridFunction:
    """``psi_J`` sampled at the grid midpoints."""
    _check_resolvable(J, grid)
    lo, hi = psi.support_of(J)
    if hi <= float(grid.window.left) or lo >= float(grid.window.right):
        raise DomainError(f"support of psi_J for J={J} misses the window")
    return GridFunction(grid, psi.psi_J(J, grid.midpoints()))


def _support_slice(psi: WaveletModel, J: DyadicInterval, grid: Grid) -> tuple[int, np.ndarray]:
    """``(i0, values)`` with ``values`` the template clipped to the window."""
    off, vals = psi.template(J.scale, grid.level)
    start = int((J.left - grid.window.left) / grid.step_exact) + off
    a = max(start, 0)
    b = min(start + vals.size, grid.size)
    if a >= b:
        return 0, vals[:0]
    return a, vals[a - start: b - start]


def coefficient(psi: WaveletModel, J: DyadicInterval, f: GridFunction) -> np.ndarray:
    """``<psi_J, f>`` by the midpoint rule (``f`` is zero outside its window)."""
    _check_resolvable(J, f.grid)
    i0, vals = _support_slice(psi, J, f.grid)
    return vals @ f.samples[i0: i0 + vals.size] * f.grid.step


def wavelet_coefficients(psi: WaveletModel, f: GridFunction, min_scale: int,
                         max_scale: int | None = None, region: Interval | None = None):
    """All ``<psi_J, f>`` for dyadic ``J`` inside ``region`` (default: the window).

    One strided correlation per scale; each coefficient equals
    :func:`coefficient` for the same ``J`` up to summation order.
    """
    from .norms import CoefficientArray

    grid = f.grid
    region = region or grid.window
    if min_scale < -grid.level:
        raise ResolutionError("min_scale below the grid step")
    rows = {}
    Js = dyadics_within(region, min_scale)
    scales = sorted({J.scale for J in Js if max_scale is None or J.scale <= max_scale})
    for j in scales:
        ks = [J.position for J in Js if J.scale == j]
        k0, k1 = ks[0], ks[-1] + 1
        off, tmpl = psi.template(j, grid.level)
        per = 2 ** (j + grid.level)
        first = int((pow2(j) * k0 - grid.window.left) / grid.step_exact) + off
        count = k1 - k0
        need_lo = min(first, 0)
        need_hi = max(first + (count - 1) * per + tmpl.size, grid.size)
        pad_left = -need_lo
        padded = np.zeros((need_hi - need_lo, f.space.dim))
        padded[pad_left: pad_left + grid.size] = f.samples
        start = first + pad_left
        view = sliding_window_view(padded[start:], tmpl.size, axis=0)[: (count - 1) * per + 1: per]
        vals = np.einsum("kdn,n->kd", view, tmpl) * grid.step
        rows[j] = (k0, vals)
    return CoefficientArray.from_rows(rows, f.space, provenance={"wavelet": psi.spec(), "level": grid.level})


def psi_class_check(psi: WaveletModel, u: float, v: float, bound: float = 1e3,
                    which: str = "psi") -> tuple[float, bool]:
    """Decay constants of ``psi`` (or ``phi``) and its forward-difference derivative.

    ``C = max(max |f(x)| (1+|x|)**u, max |Df(x)| (1+|x|)**v)`` over the table,
    where ``Df`` is the forward difference quotient at the table step.  The
    function vanishes outside the table, so the decay part is exact there.
    """
    table, lo = (psi.psi_table, psi.psi_lo) if which == "psi" else (psi.phi_table, psi.phi_lo)
    h = 2.0 ** -psi.level
    x = lo + np.arange(table.size) * h
    size_c = float(np.max(np.abs(table) * (1 + np.abs(x)) ** u))
    # include the step back to zero at both ends of the support
    ext = np.concatenate([[0.0], table, [0.0]])
    xe = np.concatenate([[lo - h], x, [x[-1] + h]])
    d = np.diff(ext) / h
    deriv_c = float(np.max(np.abs(d) * (1 + np.abs(xe[:-1])) ** v))
    C = max(size_c, deriv_c)
    return C, bool(C <= bound)


def orthonormality_residual(psi: WaveletModel, family: Sequence[DyadicInterval], grid: Grid) -> float:
    """``max |<psi_J, psi_J'> - delta|`` over ``family`` by the midpoint rule."""
    for J in family:
        _check_resolvable(J, grid)
    x = grid.midpoints()
    # unnormalized columns keep Haar products exact; the scale factor is applied once
    cols = np.stack([psi.psi((x - float(J.left)) / 2.0 ** J.scale) for J in family], axis=1)
    js = np.array([J.scale for J in family], dtype=float)
    gram = cols.T @ cols * grid.step * 2.0 ** (-(js[:, None] + js[None, :]) / 2)
    return float(np.max(np.abs(gram - np.eye(len(family)))))


# -- kernel size bound ------------------------------------------------------

_M1 = np.uint64(0x9E3779B97F4A7C15)
_M2 = np.uint64(0xBF58476D1CE4E5B9)
_M3 = np.uint64(0x94D049BB133111EB)


def _splitmix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + _M1
        x = (x ^ (x >> np.uint64(30))) * _M2
        x = (x ^ (x >> np.uint64(27))) * _M3
        return x ^ (x >> np.uint64(31))


def random_sign_coefficients(seed: int) -> Callable[[int, np.ndarray], np.ndarray]:
    """Counter-based random signs ``a_jk`` in ``{-1, +1}`` keyed by ``(seed, j, k)``."""
    def coeff(j: int, ks: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            key = _splitmix(np.uint64(seed % 2 ** 64) + _splitmix(np.uint64(j % 2 ** 64)))
            x = _splitmix(key ^ np.asarray(ks, dtype=np.int64).astype(np.uint64))
        return 1.0 - 2.0 * (x & np.uint64(1)).astype(float)
    return coeff


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """``K(x, y) = sum_(j,k) a_jk 2**j phi(2**j x - k) psi(2**j y - k)`` for ``j_min <= j <= j_max``.

    ``phi`` and ``psi`` are both taken as the *wavelet* functions of the given
    models.  ``coeff(j, ks)`` returns the ``a_jk``; values must lie in [-1, 1].
    """

    phi: WaveletModel
    psi: WaveletModel
    j_min: int
    j_max: int
    coeff: Callable[[int, np.ndarray], np.ndarray]

    def with_range(self, j_min: int, j_max: int) -> "KernelSpec":
        return KernelSpec(self.phi, self.psi, j_min, j_max, self.coeff)


def kernel_value(ks: KernelSpec, x: float, y: float) -> float:
    total = 0.0
    plo, phi_hi = ks.phi.psi_support
    qlo, qhi = ks.psi.psi_support
    for j in range(ks.j_min, ks.j_max + 1):
        s = 2.0 ** j
        # k with 2^j x - k in (plo, phi_hi) and 2^j y - k in (qlo, qhi)
        k_lo = max(math.floor(s * x - phi_hi), math.floor(s * y - qhi))
        k_hi = min(math.ceil(s * x - plo), math.ceil(s * y - qlo))
        if k_hi < k_lo:
            continue
        k = np.arange(k_lo, k_hi + 1)
        a = ks.coeff(j, k)
        if np.any(np.abs(a) > 1):
            raise PreconditionError("kernel coefficients must satisfy |a_jk| <= 1")
        total += s * float(np.sum(a * ks.phi.psi(s * x - k) * ks.psi.psi(s * y - k)))
    return total


def kernel_size_check(ks: KernelSpec, pairs: Sequence[tuple[float, float]],
                      bound: float = 1e3) -> tuple[float, bool]:
    """``max |K(x, y)| |x - y|`` over ``pairs``."""
    worst = 0.0
    for x, y in pairs:
        if x == y:
            raise DomainError("kernel is only evaluated off the diagonal")
        worst = max(worst, abs(kernel_value(ks, x, y)) * abs(x - y))
    return worst, bool(worst <= bound)
