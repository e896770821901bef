"""Local synthesis of BMO functions from wavelet coefficients.

For a reporting interval ``I`` the dyadic intervals split into three groups:
large ones (``2|J| > |I|``), small ones far from ``I`` and small ones near
``I``.  Large terms are renormalized by subtracting their value at the centre
of ``I`` so that the sum converges locally; the resulting ``f_I`` depends on
``I`` only up to an additive constant.

Also here: annular decomposition of a function around an interval and two
elementary inequalities used in the proofs (oscillation growth over dilates,
Holder for weights).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .dyadic import (DyadicInterval, Grid, GridFunction, Interval, average, integrate_norm,
                     write_gridfunction)
from .errors import DegenerateWeightError, DomainError, PreconditionError, ResolutionError, TruncationError
from .growth import GrowthModel, eta
from .norms import CoefficientArray
from .wavelets import WaveletModel
from .weights import WeightModel

__all__ = [
    "AnnularPiece",
    "annular_decompose",
    "oscillation_growth_check",
    "holder_weight_check",
    "IntervalClassification",
    "classify",
    "SynthesisCutoffs",
    "SynthesisResult",
    "synthesize",
    "constancy_check",
    "individual_bound_check",
    "piece_ratios",
    "unconditionality_probe",
    "write_synthesis",
]


# -- annular decomposition --------------------------------------------------

@dataclass(frozen=True)
class AnnularPiece:
    level: int
    function: GridFunction


def _largest_feasible(window: Interval, I: Interval) -> int:
    l = 0
    while window.contains(I.dilate(2 ** (l + 1))):
        l += 1
    return l


def annular_decompose(f: GridFunction, I: Interval, l_max: int) -> list[AnnularPiece]:
    """Split ``f - <f>_I`` over ``2I`` and the annuli ``2^l I \\ 2^(l-1) I``.

    Pieces are returned for ``l = 1 .. l_max``; together with the mean they
    rebuild ``f`` on ``2^l_max I``.
    """
    if l_max < 1:
        raise DomainError("l_max must be >= 1")
    window = f.grid.window
    if not window.contains(I.dilate(2 ** l_max)):
        best = _largest_feasible(window, I)
        raise TruncationError(f"2^{l_max} I leaves the window; largest feasible l_max is {best}",
                              largest_feasible=best)
    mean = average(f, I)
    centred = f.samples - mean
    pieces = []
    prev = (0, 0)
    for l in range(1, l_max + 1):
        a, b = f.grid.index_range(I.dilate(2 ** l))
        mask = np.zeros(f.grid.size, dtype=bool)
        mask[a:b] = True
        mask[prev[0]:prev[1]] = False
        pieces.append(AnnularPiece(l, f.with_samples(np.where(mask[:, None], centred, 0.0))))
        prev = (a, b)
    return pieces


def oscillation_growth_check(f: GridFunction, w: WeightModel, rho: GrowthModel, I: Interval, l: int):
    """``int_{2^l I} ||f - <f>_I||`` against ``sum_k 2^(l-k) w(2^k I) rho(2^k |I|)``.

    ``f`` should already be scaled to BMO norm at most one.  Returns
    ``(lhs, rhs, lhs / rhs)``.
    """
    if l < 1:
        raise DomainError("l must be >= 1")
    big = I.dilate(2 ** l)
    if not f.grid.window.contains(big):
        best = _largest_feasible(f.grid.window, I)
        raise TruncationError(f"2^{l} I leaves the window", largest_feasible=best)
    mean = average(f, I)
    a, b = f.grid.index_range(big)
    lhs = float(np.sum(f.space.norm(f.samples[a:b] - mean)) * f.grid.step)
    rhs = sum(2 ** (l - k) * w.mass(I.dilate(2 ** k)) * rho(float(I.length) * 2 ** k)
              for k in range(1, l + 1))
    return lhs, rhs, lhs / rhs


def holder_weight_check(w: WeightModel, J: Interval | DyadicInterval, p: float):
    """``(|J|/w(J))^(1/p') <= |J|^-1 int_J w^(-1/p')``; returns ``(lhs, rhs, ok)``."""
    if not 1 < p < math.inf:
        raise DomainError("p must lie in (1, inf)")
    pprime = p / (p - 1)
    wJ = w.mass(J)
    if not wJ > 0:
        raise DegenerateWeightError(f"w vanishes on {J}")
    length = float(J.length)
    lhs = (length / wJ) ** (1.0 / pprime)
    rhs = w.power_integral(J, -1.0 / pprime) / length
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-9))


# -- classification ---------------------------------------------------------

@dataclass(frozen=True)
class IntervalClassification:
    interval: Interval
    large: tuple[DyadicInterval, ...]
    far: tuple[DyadicInterval, ...]
    near: tuple[DyadicInterval, ...]

    def group_of(self, J: DyadicInterval) -> int:
        for g, members in enumerate((self.large, self.far, self.near), start=1):
            if J in members:
                return g
        raise KeyError(J)

    def __len__(self) -> int:
        return len(self.large) + len(self.far) + len(self.near)


def _group(I: Interval, J: DyadicInterval) -> int:
    if 2 * J.length > I.length:
        return 1
    return 3 if J.interval().dilate(2).intersects(I.dilate(2)) else 2


def classify(I: Interval, candidates: Sequence[DyadicInterval]) -> IntervalClassification:
    """Split ``candidates`` into large / small-and-far / small-and-near relative to ``I``."""
    groups: tuple[list, list, list] = ([], [], [])
    for J in candidates:
        groups[_group(I, J) - 1].append(J)
    return IntervalClassification(I, *map(tuple, groups))


# -- synthesis ----------------------------------------------------------------

@dataclass(frozen=True)
class SynthesisCutoffs:
    """Which coefficients enter the sums: ``min_scale <= scale <= max_scale`` and ``J`` inside ``[-radius, radius)``.

    The admitted set does not depend on the reporting interval, so two
    syntheses with equal cutoffs use the same terms.
    """

    min_scale: int
    max_scale: int
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "radius", Fraction(self.radius))
        if self.min_scale > self.max_scale:
            raise DomainError("min_scale exceeds max_scale")
        if self.radius <= 0:
            raise DomainError("radius must be positive")

    def admits(self, J: DyadicInterval) -> bool:
        return (self.min_scale <= J.scale <= self.max_scale
                and -self.radius <= J.left and J.right <= self.radius)

    def to_json(self) -> dict:
        return {"min_scale": self.min_scale, "max_scale": self.max_scale, "radius": str(self.radius)}


@dataclass(eq=False)
class SynthesisResult:
    interval: Interval
    f1: GridFunction
    f2: GridFunction
    f3: GridFunction
    renormalization: dict
    cutoffs: SynthesisCutoffs
    tail_bound: float
    omitted: int
    counts: tuple[int, int, int]
    near_terms: list = field(default_factory=list, repr=False)

    @property
    def f_I(self) -> GridFunction:
        return self.f1 + self.f2 + self.f3

    @property
    def centre_constant(self) -> np.ndarray:
        """``<f_I>_I``, the additive constant removed by :meth:`normalized`."""
        return average(self.f_I, self.interval)

    def normalized(self) -> GridFunction:
        f = self.f_I
        return f.with_samples(f.samples - self.centre_constant)

    def piece_norms(self, s: float = 1.1) -> dict:
        I = self.interval
        return {"sup_f1": float(np.max(self.f1.norms(), initial=0.0)),
                "sup_f2": float(np.max(self.f2.norms(), initial=0.0)),
                "ls_f3": integrate_norm(self.f3, I, s) ** (1.0 / s), "s": s}

    def sidecar(self) -> dict:
        return {"interval": [str(self.interval.left), str(self.interval.right)],
                "centre": str(self.interval.centre),
                "cutoffs": self.cutoffs.to_json(),
                "renormalization": [[J.scale, J.position, [float(x) for x in c]]
                                    for J, c in sorted(self.renormalization.items())],
                "tail_bound": self.tail_bound, "omitted_terms": self.omitted,
                "group_sizes": list(self.counts), "piece_norms": self.piece_norms()}


def synthesize(a: CoefficientArray, psi: WaveletModel, I: Interval, cutoffs: SynthesisCutoffs,
               level: int = 10, check_hypotheses: bool = True) -> SynthesisResult:
    """Evaluate ``f_1, f_2, f_3`` at the midpoints of a level-``level`` grid on ``I``.

    Only coefficients admitted by ``cutoffs`` are summed.  The others are
    counted, and ``tail_bound`` bounds their possible contribution to
    ``sup_I ||f_I||``.
    """
    if check_hypotheses and not psi.satisfies_hypotheses:
        raise PreconditionError(f"{psi.kind}({psi.order}) lacks the smoothness and decay the synthesis needs")
    grid = Grid(I, level)
    x = grid.midpoints()
    xc = float(I.centre)
    d = a.space.dim
    acc = [np.zeros((grid.size, d)) for _ in range(3)]
    renorm, near_terms = {}, []
    counts = [0, 0, 0]
    tail, omitted = 0.0, 0
    lo_I, hi_I = float(I.left), float(I.right)
    for j in sorted(a.rows, reverse=True):
        k0, vals = a.rows[j]
        size = 2.0 ** j
        slo, shi = psi.psi_support
        for i in np.nonzero(np.any(vals != 0, axis=1))[0]:
            J = DyadicInterval(j, k0 + int(i))
            left = float(J.left)
            if left + shi * size <= lo_I or left + slo * size >= hi_I:
                continue  # psi_J vanishes on I, so every group contributes zero
            g = _group(I, J)
            coef = vals[i]
            if not cutoffs.admits(J):
                omitted += 1
                peak = float(np.max(np.abs(psi.psi_table))) / math.sqrt(size)
                tail += float(a.space.norm(coef)) * peak * (2.0 if g == 1 else 1.0)
                continue
            if j < -level:
                raise ResolutionError(f"{J} is finer than the reporting grid")
            counts[g - 1] += 1
            if g == 1:
                # the renormalized term is nonzero off the support as well
                c = float(psi.psi_J(J, np.array([xc]))[0])
                renorm[J] = coef * c
                acc[0] += (psi.psi_J(J, x) - c)[:, None] * coef[None, :]
                continue
            i0 = max(0, int(math.floor((left + slo * size - lo_I) / grid.step)))
            i1 = min(grid.size, int(math.ceil((left + shi * size - lo_I) / grid.step)) + 1)
            acc[g - 1][i0:i1] += psi.psi_J(J, x[i0:i1])[:, None] * coef[None, :]
            if g == 3:
                near_terms.append((J, coef))
    f1, f2, f3 = (GridFunction(grid, v, a.space) for v in acc)
    return SynthesisResult(I, f1, f2, f3, renorm, cutoffs, tail, omitted, tuple(counts), near_terms)


def constancy_check(a: CoefficientArray, psi: WaveletModel, I: Interval, I_big: Interval,
                    cutoffs: SynthesisCutoffs, cutoffs_big: SynthesisCutoffs | None = None,
                    level: int = 10, check_hypotheses: bool = True) -> float:
    """Largest deviation of ``f_{I'} - f_I`` from its mean on ``I``."""
    if cutoffs_big is not None and cutoffs_big != cutoffs:
        raise PreconditionError("constancy needs identical cutoffs for both intervals")
    if not I_big.contains(I):
        raise PreconditionError(f"{I} is not inside {I_big}")
    small = synthesize(a, psi, I, cutoffs, level, check_hypotheses).f_I
    big = synthesize(a, psi, I_big, cutoffs, level, check_hypotheses).f_I
    diff = big.restrict(I) - small.samples
    dev = a.space.norm(diff - diff.mean(axis=0))
    return float(np.max(dev, initial=0.0))


def individual_bound_check(a: CoefficientArray, w: WeightModel, rho: GrowthModel, J: DyadicInterval,
                           carleson_value: float, tol: float = 1e-9) -> bool:
    """``||a_J|| / C <= rho(|J|) w(J) |J|^-1/2`` where ``C`` is the Carleson norm of ``a``."""
    norm = float(a.space.norm(a[J]))
    if norm == 0:
        return True
    if not carleson_value > 0:
        return False
    length = float(J.length)
    bound = rho(length) * w.mass(J) / math.sqrt(length)
    return norm / carleson_value <= bound * (1 + tol)


def piece_ratios(result: SynthesisResult, w: WeightModel, rho: GrowthModel, q: float,
                 s: float = 1.1, eta_rho: GrowthModel | None = None) -> dict:
    """Each piece's size divided by the scale it should stay below.

    ``f1``: ``sup||f1|| |I| / (w(I) eta(|I|))``; ``f2``: ``sup||f2|| |I| / (w(I) rho(|I|))``;
    ``f3``: ``||f3||_{L^s(I)} |I|^(1/s') / (w(I) rho(|I|))``.
    """
    I = result.interval
    t = float(I.length)
    wI = w.mass(I)
    et = eta_rho(t) if eta_rho is not None else eta(rho, q, t)
    norms = result.piece_norms(s)
    s_prime = s / (s - 1)
    return {"f1": norms["sup_f1"] * t / (wI * et),
            "f2": norms["sup_f2"] * t / (wI * rho(t)),
            "f3": norms["ls_f3"] * t ** (1.0 / s_prime) / (wI * rho(t))}


def unconditionality_probe(result: SynthesisResult, psi: WaveletModel, n_trials: int = 20,
                           s: float = 1.1, seed: int = 0) -> dict:
    """Re-sum the near group in random orders and over random subsets.

    Reports the largest change of the full sum under reordering (rounding only)
    and the largest ``L^s(I)`` norm of a random subset sum or of its complement,
    relative to the full sum.  Subsets of a Carleson-normalized array stay
    normalized, so the latter must stay bounded.
    """
    terms = result.near_terms
    grid = result.f3.grid
    x = grid.midpoints()
    if not terms:
        return {"reorder_deviation": 0.0, "subset_ratio": 0.0, "trials": n_trials}
    cols = np.stack([psi.psi_J(J, x)[:, None] * c[None, :] for J, c in terms])  # (n, pts, d)
    full = result.f3.samples
    full_norm = integrate_norm(result.f3, result.interval, s) ** (1.0 / s)
    rng = np.random.default_rng(seed)
    worst_dev, worst_ratio = 0.0, 0.0
    for _ in range(n_trials):
        perm = rng.permutation(len(terms))
        total = np.zeros_like(full)
        for i in perm:
            total += cols[i]
        worst_dev = max(worst_dev, float(np.max(np.abs(total - full))))
        mask = rng.integers(0, 2, len(terms)).astype(bool)
        for part in (mask, ~mask):
            sub = GridFunction(grid, cols[part].sum(axis=0), result.f3.space)
            val = integrate_norm(sub, result.interval, s) ** (1.0 / s)
            if full_norm > 0:
                worst_ratio = max(worst_ratio, val / full_norm)
    return {"reorder_deviation": worst_dev, "subset_ratio": worst_ratio, "trials": n_trials}


def write_synthesis(result: SynthesisResult, directory, fmt: str = "binary") -> Path:
    """Write the pieces as grid-function files plus a ``synthesis.json`` sidecar."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    ext = "gf" if fmt == "binary" else "csv"
    for name, g in (("f1", result.f1), ("f2", result.f2), ("f3", result.f3), ("f_I", result.f_I)):
        write_gridfunction(out / f"{name}.{ext}", g, fmt)
    side = out / "synthesis.json"
    side.write_text(json.dumps(result.sidecar(), indent=2, sort_keys=True))
    return side
