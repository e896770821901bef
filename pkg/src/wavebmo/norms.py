"""Weighted BMO norms and randomized Carleson norms of coefficient arrays.

Every norm is a supremum over a finite family of intervals.  The report keeps
the attaining interval; ties go to the shorter interval, then the leftmost.

Carleson norms are evaluated cell by cell: on a cell of the finest dyadic
scale present, the only nonzero terms of the random sum come from the chain of
dyadic ancestors of the cell that lie inside ``I``.  The expectation is taken
per cell, then integrated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dyadic import (SCALAR, DyadicInterval, GridFunction, Interval, VectorSpace,
                     dyadic_family, pow2)
from .errors import DegenerateWeightError, DomainError, PreconditionError
from .growth import GrowthModel
from .randsign import EXACT_THRESHOLD, MC_SAMPLES, expected_power_norm
from .weights import WeightModel

__all__ = [
    "CoefficientArray",
    "NormReport",
    "bmo_norm",
    "jn_p_norm",
    "oscillations",
    "carleson_norm",
    "carleson_scalar_p2",
    "carleson_scalar_squarefn",
    "carleson_family",
]


@dataclass(frozen=True, eq=False)
class CoefficientArray:
    """Finitely supported map ``J -> a_J``.

    Stored by scale: ``rows[j] = (k0, values)`` with ``values[i]`` the
    coefficient of ``DyadicInterval(j, k0 + i)``.
    """

    rows: Mapping[int, tuple[int, np.ndarray]]
    space: VectorSpace = SCALAR
    provenance: dict = field(default_factory=lambda: {"kind": "synthetic"})

    @classmethod
    def from_rows(cls, rows, space: VectorSpace = SCALAR, provenance=None) -> "CoefficientArray":
        clean = {}
        for j, (k0, vals) in rows.items():
            v = np.asarray(vals, dtype=float)
            if v.ndim == 1:
                v = v[:, None]
            if v.shape[1] != space.dim:
                raise DomainError("coefficient dimension does not match the space")
            if v.shape[0]:
                v.setflags(write=False)
                clean[int(j)] = (int(k0), v)
        return cls(clean, space, provenance or {"kind": "synthetic"})

    @classmethod
    def from_dict(cls, entries: Mapping[DyadicInterval, Sequence[float]], space: VectorSpace = SCALAR,
                  provenance=None) -> "CoefficientArray":
        by_scale: dict[int, dict[int, np.ndarray]] = {}
        for J, v in entries.items():
            by_scale.setdefault(J.scale, {})[J.position] = np.atleast_1d(np.asarray(v, dtype=float))
        rows = {}
        for j, d in by_scale.items():
            k0, k1 = min(d), max(d) + 1
            vals = np.zeros((k1 - k0, space.dim))
            for k, v in d.items():
                vals[k - k0] = v
            rows[j] = (k0, vals)
        return cls.from_rows(rows, space, provenance)

    @classmethod
    def zeros(cls, space: VectorSpace = SCALAR) -> "CoefficientArray":
        return cls({}, space)

    def __getitem__(self, J: DyadicInterval) -> np.ndarray:
        row = self.rows.get(J.scale)
        if row is not None:
            k0, vals = row
            if 0 <= J.position - k0 < vals.shape[0]:
                return vals[J.position - k0]
        return np.zeros(self.space.dim)

    def items(self):
        """Nonzero entries, by scale descending then position."""
        for j in sorted(self.rows, reverse=True):
            k0, vals = self.rows[j]
            for i, v in enumerate(vals):
                if np.any(v != 0):
                    yield DyadicInterval(j, k0 + i), v

    def support(self) -> list[DyadicInterval]:
        return [J for J, _ in self.items()]

    def __len__(self) -> int:
        return sum(1 for _ in self.items())

    @property
    def is_scalar(self) -> bool:
        return self.space.dim == 1

    def scaled(self, c: float) -> "CoefficientArray":
        return CoefficientArray({j: (k0, v * c) for j, (k0, v) in self.rows.items()},
                                self.space, self.provenance)

    def restricted(self, min_scale: int | None = None, max_scale: int | None = None,
                   region: Interval | None = None) -> "CoefficientArray":
        """Entries with scale in range and (if given) ``J`` inside ``region``."""
        rows = {}
        for j, (k0, v) in self.rows.items():
            if (min_scale is not None and j < min_scale) or (max_scale is not None and j > max_scale):
                continue
            v = v.copy()
            if region is not None:
                size = pow2(j)
                ks = np.arange(k0, k0 + v.shape[0])
                lo = math.ceil(region.left / size)
                hi = math.floor(region.right / size)
                v[(ks < lo) | (ks >= hi)] = 0.0
            rows[j] = (k0, v)
        return CoefficientArray.from_rows(rows, self.space, self.provenance)

    def replace(self, J: DyadicInterval, value) -> "CoefficientArray":
        entries = dict(self.items())
        entries[J] = np.atleast_1d(np.asarray(value, dtype=float))
        return CoefficientArray.from_dict(entries, self.space, self.provenance)

    def to_json(self) -> dict:
        return {"space": {"dim": self.space.dim, "r": self.space.r}, "provenance": self.provenance,
                "entries": [[J.scale, J.position, [float(x) for x in v]] for J, v in self.items()]}

    @classmethod
    def from_json(cls, data: dict) -> "CoefficientArray":
        space = VectorSpace(data["space"]["dim"], data["space"]["r"])
        entries = {DyadicInterval(j, k): v for j, k, v in data["entries"]}
        return cls.from_dict(entries, space, data.get("provenance"))


@dataclass
class NormReport:
    value: float
    interval: Interval | None
    family_size: int
    mode: str = "deterministic"
    stderr: float = 0.0
    breakdown: list | None = None

    def to_json(self) -> dict:
        out = {"value": self.value,
               "interval": None if self.interval is None else [str(self.interval.left), str(self.interval.right)],
               "family_size": self.family_size, "mode": self.mode}
        if self.stderr:
            out["stderr"] = self.stderr
        if self.breakdown is not None:
            out["breakdown"] = [[str(I.left), str(I.right), v] for I, v in self.breakdown]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _select(values: Sequence[float], family: Sequence[Interval], breakdown: bool, mode="deterministic",
            stderrs=None) -> NormReport:
    if not family:
        raise DomainError("empty interval family")
    best, arg, idx = -math.inf, None, -1
    for i, (v, I) in enumerate(zip(values, family)):
        if v > best or (v == best and (I.length, I.left) < (arg.length, arg.left)):
            best, arg, idx = v, I, i
    se = 0.0 if stderrs is None else float(stderrs[idx])
    return NormReport(float(best), arg, len(family), mode, se,
                      list(zip(family, map(float, values))) if breakdown else None)


# -- BMO --------------------------------------------------------------------

def oscillations(f: GridFunction, family: Sequence[Interval], p: float = 1.0,
                 density: GridFunction | None = None) -> np.ndarray:
    """``int_I ||f - <f>_I||^p g`` for every ``I`` in ``family``.

    Intervals of equal sample length are processed together through a strided
    view of the samples.
    """
    grid = f.grid
    ranges = np.array([grid.index_range(I) for I in family], dtype=np.int64).reshape(-1, 2)
    out = np.empty(len(family))
    S = f.samples
    prefix = np.vstack([np.zeros((1, S.shape[1])), np.cumsum(S, axis=0)])
    g = None if density is None else density.samples[:, 0]
    if g is not None and np.any(g < 0):
        raise DegenerateWeightError("density has negative samples")
    lengths = ranges[:, 1] - ranges[:, 0]
    for n in np.unique(lengths):
        sel = np.nonzero(lengths == n)[0]
        starts = ranges[sel, 0]
        view = sliding_window_view(S, n, axis=0)  # (N-n+1, d, n)
        gview = None if g is None else sliding_window_view(g, n)
        chunk = max(1, (1 << 22) // max(1, n * S.shape[1]))
        for c in range(0, sel.size, chunk):
            st = starts[c: c + chunk]
            win = view[st]  # (m, d, n)
            mean = (prefix[st + n] - prefix[st]) / n
            vals = f.space.norm(win - mean[:, :, None], axis=1)
            if p != 1.0:
                vals = vals ** p
            if gview is not None:
                vals = vals * gview[st]
            out[sel[c: c + chunk]] = vals.sum(axis=1) * grid.step
    return out


def _density_on(w: WeightModel, e: float, grid) -> GridFunction:
    """``w**e`` on ``grid``, which must be a same-level sub-window of the weight grid."""
    if grid == w.grid:
        return w.density(e)
    if grid.level != w.grid.level:
        raise DomainError("function and weight grids have different resolutions")
    i0, i1 = w.grid.index_range(grid.window)
    return GridFunction(grid, w.values[i0:i1] ** e)


def _bmo_like(f, w, rho, family, p, breakdown):
    if not family:
        raise DomainError("empty interval family")
    density = None if p == 1.0 else _density_on(w, 1.0 - p, f.grid)
    osc = oscillations(f, family, p, density)
    vals = np.empty(len(family))
    for i, I in enumerate(family):
        wI = w.mass(I)
        if not wI > 0:
            raise DegenerateWeightError(f"w(I) = {wI} on {I}")
        vals[i] = (osc[i] / wI) ** (1.0 / p) / rho(float(I.length))
    return _select(vals, family, breakdown)


def bmo_norm(f: GridFunction, w: WeightModel, rho: GrowthModel, family: Sequence[Interval],
             breakdown: bool = False) -> NormReport:
    """``max_I (w(I) rho(|I|))**-1 int_I ||f - <f>_I||``."""
    return _bmo_like(f, w, rho, family, 1.0, breakdown)


def jn_p_norm(f: GridFunction, w: WeightModel, rho: GrowthModel, p: float,
              family: Sequence[Interval], breakdown: bool = False) -> NormReport:
    """``max_I rho(|I|)**-1 (w(I)**-1 int_I ||f - <f>_I||^p w**(1-p))**(1/p)``.

    ``p = 1`` runs the very same arithmetic as :func:`bmo_norm`.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    return _bmo_like(f, w, rho, family, float(p), breakdown)


# -- Carleson ---------------------------------------------------------------

def carleson_family(window: Interval, min_scale: int, max_scale: int | None = None) -> list[Interval]:
    """Default family: every dyadic interval of the window plus the window."""
    return dyadic_family(window, min_scale, max_scale, include_window=True)


def _chain_terms(a: CoefficientArray, w: WeightModel, I: Interval, min_scale: int, expo: float):
    """Per-cell ancestor chains inside ``I``.

    Returns ``(cell_length, terms)`` with ``terms[c, l]`` the rescaled
    coefficient ``a_J (|J|/w(J))**expo |J|**-1/2`` of the level-``l`` ancestor
    ``J`` of cell ``c`` (zero when absent or not inside ``I``), or ``None``
    when no coefficient lies in ``I``.
    """
    grid = w.grid
    present = []
    for j in sorted(a.rows, reverse=True):
        if j < min_scale or pow2(j) > I.length:
            continue
        k0, vals = a.rows[j]
        size = pow2(j)
        lo = max(math.ceil(I.left / size), k0)
        hi = min(math.floor(I.right / size), k0 + vals.shape[0])
        if hi > lo and np.any(vals[lo - k0: hi - k0] != 0):
            present.append((j, lo, hi, k0, vals))
    if not present:
        return None
    s_f = present[-1][0]
    if s_f < -grid.level:
        raise DomainError("coefficient scale finer than the weight grid")
    cell = pow2(s_f)
    c0 = math.ceil(I.left / cell)
    c1 = math.floor(I.right / cell)
    cells = np.arange(c0, c1, dtype=np.int64)
    terms = np.zeros((cells.size, len(present), a.space.dim))
    wl = grid.window.left
    for l, (j, lo, hi, k0, vals) in enumerate(present):
        ks = np.arange(lo, hi, dtype=np.int64)
        size = pow2(j)
        n = int(size / grid.step_exact)
        first = int((size * lo - wl) / grid.step_exact)
        starts = first + (ks - lo) * n
        wJ = w.masses(starts, starts + n)
        if np.any(wJ <= 0):
            raise DegenerateWeightError("w(J) vanishes")
        L = float(size)
        xi = vals[lo - k0: hi - k0] * ((L / wJ) ** expo / math.sqrt(L))[:, None]
        anc = cells >> (j - s_f)
        inside = (anc >= lo) & (anc < hi)
        terms[inside, l] = xi[anc[inside] - lo]
    return float(cell), terms


def _carleson_values(a, w, rho, p, family, min_scale, exact_threshold, mc_samples, seed):
    pprime = p / (p - 1)
    vals = np.zeros(len(family))
    ses = np.zeros(len(family))
    mode = "exact"
    for i, I in enumerate(family):
        ch = _chain_terms(a, w, I, min_scale, 1.0 / pprime)
        if ch is None:
            continue
        cell, terms = ch
        if terms.shape[1] <= exact_threshold:
            integral = float(np.sum(expected_power_norm(terms, p, a.space))) * cell
            se = 0.0
        else:
            mode = "monte-carlo"
            integral, se = _mc_chain_integral(terms, p, a.space, mc_samples, seed + i)
            se *= cell
            integral *= cell
        wI = w.mass(I)
        if not wI > 0:
            raise DegenerateWeightError(f"w(I) vanishes on {I}")
        v = (integral / wI) ** (1.0 / p)
        vals[i] = v / rho(float(I.length))
        if integral > 0:
            ses[i] = v / (p * integral) * se / rho(float(I.length))
    return vals, ses, mode


def _mc_chain_integral(terms, p, space, n_samples, seed):
    """Monte Carlo estimate of ``sum_c E||sum_l eps_l terms[c, l]||^p`` and its stderr."""
    B, n, d = terms.shape
    z = []
    chunk = 2048
    for c, start in enumerate(range(0, n_samples, chunk)):
        count = min(chunk, n_samples - start)
        rng = np.random.Generator(np.random.Philox(key=[seed % 2 ** 64, c]))
        eps = 1.0 - 2.0 * rng.integers(0, 2, size=(count, n))
        sums = np.einsum("sn,bnd->sbd", eps, terms)
        z.append(np.sum(space.norm(sums) ** p, axis=1))
    z = np.concatenate(z)
    return float(z.mean()), float(z.std(ddof=1) / math.sqrt(z.size))


def carleson_norm(a: CoefficientArray, w: WeightModel, rho: GrowthModel, p: float,
                  family: Sequence[Interval] | None = None, min_scale: int | None = None,
                  exact_threshold: int = EXACT_THRESHOLD, mc_samples: int = MC_SAMPLES,
                  seed: int = 0, breakdown: bool = False) -> NormReport:
    """Randomized Carleson norm with exponent ``p``.

    The inner sum runs over dyadic ``J`` inside ``I`` with ``|J| >= 2**min_scale``
    (default: the grid step).  Chains longer than ``exact_threshold`` switch that
    interval to Monte Carlo and the report mode says so.
    """
    if not 1 < p < math.inf:
        raise DomainError("p must lie in (1, inf)")
    min_scale = -w.grid.level if min_scale is None else min_scale
    family = carleson_family(w.grid.window, min_scale) if family is None else family
    vals, ses, mode = _carleson_values(a, w, rho, p, family, min_scale, exact_threshold, mc_samples, seed)
    return _select(vals, family, breakdown, mode, ses)


def _require_scalar(a: CoefficientArray) -> None:
    if not a.is_scalar:
        raise PreconditionError("scalar coefficients required")


def carleson_scalar_p2(a: CoefficientArray, w: WeightModel, rho: GrowthModel,
                       family: Sequence[Interval] | None = None, min_scale: int | None = None,
                       breakdown: bool = False) -> NormReport:
    """``max_I rho(|I|)**-1 (w(I)**-1 sum_(J in I) |a_J|^2 |J|/w(J))**(1/2)``."""
    _require_scalar(a)
    min_scale = -w.grid.level if min_scale is None else min_scale
    family = carleson_family(w.grid.window, min_scale) if family is None else family
    vals = np.zeros(len(family))
    for i, I in enumerate(family):
        total = 0.0
        for j, (k0, v) in a.rows.items():
            if j < min_scale or pow2(j) > I.length:
                continue
            size = pow2(j)
            lo = max(math.ceil(I.left / size), k0)
            hi = min(math.floor(I.right / size), k0 + v.shape[0])
            if hi <= lo:
                continue
            n = int(size / w.grid.step_exact)
            first = int((size * lo - w.grid.window.left) / w.grid.step_exact)
            starts = first + np.arange(hi - lo) * n
            wJ = w.masses(starts, starts + n)
            total += float(np.sum(v[lo - k0: hi - k0, 0] ** 2 * float(size) / wJ))
        vals[i] = math.sqrt(total / w.mass(I)) / rho(float(I.length))
    return _select(vals, family, breakdown)


def carleson_scalar_squarefn(a: CoefficientArray, w: WeightModel, rho: GrowthModel, p: float,
                             family: Sequence[Interval] | None = None, min_scale: int | None = None,
                             breakdown: bool = False) -> NormReport:
    """Square-function form: ``[sum |c_J|^2 (|J|/w(J))**(2/p') 1_J/|J|]**(p/2)`` integrated."""
    _require_scalar(a)
    if not 1 < p < math.inf:
        raise DomainError("p must lie in (1, inf)")
    pprime = p / (p - 1)
    min_scale = -w.grid.level if min_scale is None else min_scale
    family = carleson_family(w.grid.window, min_scale) if family is None else family
    vals = np.zeros(len(family))
    for i, I in enumerate(family):
        ch = _chain_terms(a, w, I, min_scale, 1.0 / pprime)
        if ch is None:
            continue
        cell, terms = ch
        sq = np.sum(terms[:, :, 0] ** 2, axis=1)
        integral = float(np.sum(sq ** (p / 2))) * cell
        vals[i] = (integral / w.mass(I)) ** (1.0 / p) / rho(float(I.length))
    return _select(vals, family, breakdown)
