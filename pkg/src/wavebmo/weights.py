"""Muckenhoupt weights on the working grid.

A :class:`WeightModel` stores strictly positive midpoint samples together with
prefix sums, so interval masses ``w(I)`` cost two lookups.  Prefix sums of the
powers ``w**e`` that the A_q quotient and the John-Nirenberg variant need are
built on first use and then kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dyadic import DyadicInterval, Grid, GridFunction, Interval, dyadics_within
from .errors import DegenerateWeightError, DomainError, TruncationError

__all__ = [
    "WeightModel",
    "AqCertificate",
    "aq_quotient",
    "aq_constant",
    "canonical_family",
    "dilation_growth",
    "power_mass",
    "power_aq_quotient",
    "refinement_sweep",
]


@dataclass(frozen=True, eq=False)
class WeightModel:
    kind: str
    samples: GridFunction
    params: dict = field(default_factory=dict)
    _prefix: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        w = self.samples.samples[:, 0]
        if w.size and not np.all(w > 0):
            bad = int(np.argmin(w))
            raise DegenerateWeightError(
                f"weight is not positive at sample {bad} (value {w[bad]!r})")
        self._prefix[1.0] = _prefix(w)

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, grid: Grid, c: float = 1.0) -> "WeightModel":
        return cls("constant", GridFunction(grid, np.full(grid.size, float(c))), {"c": float(c)})

    @classmethod
    def power(cls, grid: Grid, a: float, center: float = 0.0) -> "WeightModel":
        """``|x - center|**a``; midpoint samples never hit a grid-point centre."""
        if a <= -1:
            raise DomainError("power weight needs a > -1 to be locally integrable")
        x = grid.midpoints()
        return cls("power", GridFunction(grid, np.abs(x - center) ** a),
                   {"a": float(a), "center": float(center)})

    @classmethod
    def step(cls, grid: Grid, low: float, high: float, breakpoint: float = 0.0) -> "WeightModel":
        """``low`` left of ``breakpoint``, ``high`` right of it."""
        x = grid.midpoints()
        return cls("step", GridFunction(grid, np.where(x < breakpoint, low, high)),
                   {"low": float(low), "high": float(high), "breakpoint": float(breakpoint)})

    @classmethod
    def sampled(cls, f: GridFunction) -> "WeightModel":
        if f.space.dim != 1:
            raise DomainError("a weight must be scalar")
        return cls("sampled", f, {})

    @classmethod
    def from_spec(cls, spec: dict, grid: Grid) -> "WeightModel":
        kind = spec.get("kind", "constant")
        if kind == "constant":
            return cls.constant(grid, spec.get("c", 1.0))
        if kind == "power":
            return cls.power(grid, spec["a"], spec.get("center", 0.0))
        if kind == "step":
            return cls.step(grid, spec["low"], spec["high"], spec.get("breakpoint", 0.0))
        if kind == "sampled":
            from .dyadic import read_gridfunction
            f = read_gridfunction(spec["path"])
            if f.grid != grid:
                raise DomainError("sampled weight grid does not match the experiment grid")
            return cls.sampled(f)
        raise DomainError(f"unknown weight kind {kind!r}")

    def spec(self) -> dict:
        return {"kind": self.kind, **self.params}

    # -- evaluation --------------------------------------------------------

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    @property
    def values(self) -> np.ndarray:
        return self.samples.samples[:, 0]

    def _power_prefix(self, e: float) -> np.ndarray:
        e = float(e)
        if e not in self._prefix:
            self._prefix[e] = _prefix(self.values ** e)
        return self._prefix[e]

    def power_integral(self, I: Interval | DyadicInterval, e: float) -> float:
        """``int_I w**e``."""
        i0, i1 = self.grid.index_range(I)
        P = self._power_prefix(e)
        return float(P[i1] - P[i0]) * self.grid.step

    def mass(self, I: Interval | DyadicInterval) -> float:
        """``w(I)``."""
        return self.power_integral(I, 1.0)

    def masses(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Vectorized ``w([lo, hi))`` for sample-index bounds."""
        P = self._prefix[1.0]
        return (P[hi] - P[lo]) * self.grid.step

    def scaled(self, c: float) -> "WeightModel":
        return WeightModel(self.kind, self.samples * float(c),
                           {**self.params, "scale": c * self.params.get("scale", 1.0)})

    def density(self, e: float) -> GridFunction:
        """``w**e`` as a grid function."""
        return GridFunction(self.grid, self.values ** e)


def _prefix(v: np.ndarray) -> np.ndarray:
    out = np.zeros(v.size + 1)
    np.cumsum(v, out=out[1:])
    return out


@dataclass(frozen=True)
class AqCertificate:
    """Largest A_q quotient over a finite family of intervals.

    ``doubling`` is the largest ``w(2I)/w(I)`` over members whose double fits
    in the window (``nan`` if none does).  ``growing`` is only set by
    :func:`refinement_sweep`.
    """

    q: float
    constant: float
    family_size: int
    attained_at: Interval
    doubling: float
    growing: bool | None = None
    history: tuple = ()


def aq_quotient(w: WeightModel, q: float, I: Interval | DyadicInterval) -> float:
    """``<w>_I * <w**(-1/(q-1))>_I**(q-1)``."""
    if not q > 1:
        raise DomainError("q must exceed 1")
    i0, i1 = w.grid.index_range(I)
    seg = w.values[i0:i1]
    if np.any(seg <= 0):
        raise DegenerateWeightError(f"weight vanishes on {I}")
    # averages straight from the samples: prefix-sum differences lose digits
    return float(seg.mean() * np.mean(seg ** (-1.0 / (q - 1))) ** (q - 1))


def aq_constant(w: WeightModel, q: float, family: Sequence[Interval]) -> AqCertificate:
    if not family:
        raise DomainError("empty interval family")
    best, arg = -math.inf, None
    doubling = math.nan
    for I in family:
        v = aq_quotient(w, q, I)
        if v > best or (arg is not None and v == best and _tie_key(I) < _tie_key(arg)):
            best, arg = v, I
        twice = I.dilate(2)
        if w.grid.is_aligned(twice):
            ratio = w.mass(twice) / w.mass(I)
            doubling = ratio if math.isnan(doubling) else max(doubling, ratio)
    return AqCertificate(q, best, len(family), arg, doubling)


def _tie_key(I):
    return (I.length, I.left)


def canonical_family(window: Interval, min_scale: int) -> list[Interval]:
    """Dyadic intervals in ``window`` plus unions of two neighbouring ones of equal length."""
    out = []
    by_scale: dict[int, list[DyadicInterval]] = {}
    for J in dyadics_within(window, min_scale):
        out.append(J.interval())
        by_scale.setdefault(J.scale, []).append(J)
    for js in by_scale.values():
        for a, b in zip(js, js[1:]):
            if b.position == a.position + 1 and a.position % 2 == 1:
                out.append(Interval(a.left, b.right))
    return out


def dilation_growth(w: WeightModel, I: Interval, q: float, l_max: int) -> list[float]:
    """``w(2**l I) / (w(I) 2**(q l))`` for ``l = 0, ..., l_max`` (entry 0 is 1)."""
    base = w.mass(I)
    out = []
    for l in range(l_max + 1):
        J = I.dilate(2 ** l)
        if not w.grid.window.contains(J):
            raise TruncationError(f"2^{l} I escapes the window", l - 1)
        out.append(w.mass(J) / (base * 2.0 ** (q * l)))
    return out


# -- closed forms for power weights -----------------------------------------

def _power_antiderivative(a: float, x: float) -> float:
    return math.copysign(abs(x) ** (a + 1), x) / (a + 1)


def power_mass(a: float, center: float, left: float, right: float) -> float:
    """``int_left^right |x - center|**a dx`` for ``a > -1``."""
    return _power_antiderivative(a, right - center) - _power_antiderivative(a, left - center)


def power_aq_quotient(a: float, q: float, left: float, right: float, center: float = 0.0) -> float:
    """Exact A_q quotient of ``|x - center|**a`` on ``[left, right)``; ``inf`` when it diverges."""
    e = -a / (q - 1)
    if e <= -1 and left <= center <= right:
        return math.inf
    n = right - left
    return (power_mass(a, center, left, right) / n) * (power_mass(e, center, left, right) / n) ** (q - 1)


def refinement_sweep(spec: dict, q: float, family: Sequence[Interval], window: Interval,
                     levels: Sequence[int]) -> AqCertificate:
    """Certify an analytic weight at several resolutions and flag divergence.

    The A_q constant of a weight outside A_q is infinite; on a grid it shows up
    as a constant that keeps increasing under refinement with increments that
    do not shrink.  ``growing`` is set when the last increment is at least 90%
    of the previous one.
    """
    certs = [aq_constant(WeightModel.from_spec(spec, Grid(window, L)), q, family) for L in levels]
    values = tuple(c.constant for c in certs)
    growing = None
    if len(values) >= 3:
        d1, d2 = values[-2] - values[-3], values[-1] - values[-2]
        growing = bool(d1 > 1e-12 and d2 >= 0.9 * d1)
    last = certs[-1]
    return AqCertificate(q, last.constant, last.family_size, last.attained_at, last.doubling,
                         growing, values)
