"""Moments of Rademacher sums ``E||sum_J eps_J xi_J||^p``.

Up to ``exact_threshold`` terms the expectation is an exact average over all
sign patterns (the first sign is pinned to ``+1``; the norm is even).  Above
it a Monte Carlo estimate is used.  Random signs come from Philox streams
keyed by ``(seed, chunk index)``, so a run is reproducible no matter how the
chunks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .dyadic import SCALAR, DyadicInterval, GridFunction, Interval, VectorSpace, average
from .errors import DomainError, PreconditionError

__all__ = [
    "SignSeries",
    "MomentEstimate",
    "moment",
    "expected_power_norm",
    "khintchine_compare",
    "contraction_check",
    "kahane_ratio",
    "stein_averaging_check",
    "EXACT_THRESHOLD",
    "MC_SAMPLES",
]

EXACT_THRESHOLD = 20
MC_SAMPLES = 100_000
_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class SignSeries:
    """Finite family of vectors ``xi_J`` paired with independent signs."""

    terms: np.ndarray
    space: VectorSpace = SCALAR
    labels: tuple = ()

    def __post_init__(self):
        t = np.asarray(self.terms, dtype=float)
        if t.ndim == 1:
            t = t[:, None] if self.space.dim == 1 else t[None, :]
        if t.ndim != 2 or t.shape[1] != self.space.dim:
            raise DomainError(f"terms must have shape (n, {self.space.dim}), got {t.shape}")
        if self.labels and len(set(self.labels)) != len(self.labels):
            raise DomainError("labels must be distinct")
        object.__setattr__(self, "terms", t)

    def __len__(self) -> int:
        return self.terms.shape[0]

    def scaled(self, lam: Sequence[float]) -> "SignSeries":
        return SignSeries(self.terms * np.asarray(lam, dtype=float)[:, None], self.space, self.labels)


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    mode: str
    n_samples: int | None = None
    seed: int | None = None
    stderr: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _patterns(n: int, start: int, count: int) -> np.ndarray:
    """Sign patterns ``start .. start+count`` with the first sign fixed to +1."""
    idx = np.arange(start, start + count, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n - 1, dtype=np.int64)) & 1
    out = np.ones((count, n))
    out[:, 1:] = 1.0 - 2.0 * bits
    return out


def expected_power_norm(terms: np.ndarray, p: float, space: VectorSpace) -> np.ndarray:
    """Exact ``E||sum eps_i terms[..., i, :]||^p`` for a batch ``(B, n, d)``."""
    terms = np.asarray(terms, dtype=float)
    B, n, d = terms.shape
    if n == 0:
        return np.zeros(B)
    total = 2 ** (n - 1)
    acc = np.zeros(B)
    # chunk so that patterns x batch x dim stays around a few million entries
    per = max(1, min(total, (1 << 22) // max(1, B * d)))
    for start in range(0, total, per):
        count = min(per, total - start)
        P = _patterns(n, start, count)
        sums = np.einsum("pn,bnd->bpd", P, terms)
        acc += np.sum(space.norm(sums) ** p, axis=1)
    return acc / total


def _mc_power_norms(terms: np.ndarray, p: float, space: VectorSpace, n_samples: int, seed: int):
    """Mean and sample variance of ``||sum eps_i xi_i||^p`` over ``n_samples`` draws."""
    n = terms.shape[0]
    s1 = s2 = 0.0
    for c, start in enumerate(range(0, n_samples, _CHUNK)):
        count = min(_CHUNK, n_samples - start)
        rng = np.random.Generator(np.random.Philox(key=[seed % 2 ** 64, c]))
        eps = 1.0 - 2.0 * rng.integers(0, 2, size=(count, n))
        vals = space.norm(eps @ terms) ** p
        s1 += float(np.sum(vals))
        s2 += float(np.sum(vals * vals))
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    return mean, var


def moment(series: SignSeries, p: float, exact_threshold: int = EXACT_THRESHOLD,
           mc_samples: int = MC_SAMPLES, seed: int = 0) -> MomentEstimate:
    """``(E||sum eps_J xi_J||^p)^(1/p)``.

    Monte Carlo standard errors are propagated to the ``1/p`` power by the
    delta method.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    n = len(series)
    if n == 0:
        raise DomainError("empty sign series")
    if n <= exact_threshold:
        m = float(expected_power_norm(series.terms[None], p, series.space)[0])
        return MomentEstimate(m ** (1.0 / p), "exact")
    mean, var = _mc_power_norms(series.terms, p, series.space, mc_samples, seed)
    value = mean ** (1.0 / p)
    se_mean = math.sqrt(var / mc_samples)
    se = value / (p * mean) * se_mean if mean > 0 else 0.0
    return MomentEstimate(value, "monte-carlo", mc_samples, seed, se)


def khintchine_compare(lam: Sequence[float], p: float, **kw) -> float:
    """``(E|sum eps_J lam_J|^p)^(1/p) / (sum lam_J**2)^(1/2)``."""
    lam = np.asarray(lam, dtype=float)
    if lam.size == 0:
        raise DomainError("empty coefficient list")
    l2 = float(np.sqrt(np.sum(lam * lam)))
    if l2 == 0:
        return 1.0
    return moment(SignSeries(lam[:, None]), p, **kw).value / l2


def contraction_check(series: SignSeries, lam: Sequence[float], p: float, **kw):
    """Compare the moment of ``{lam_J xi_J}`` (lhs) with that of ``{xi_J}`` (rhs).

    Exact mode passes iff ``lhs <= rhs`` up to a relative rounding allowance of
    ``1e-12``; Monte Carlo passes iff ``lhs <= rhs + 3 * combined stderr``.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam) > 1):
        raise PreconditionError("contraction needs |lambda_J| <= 1")
    lhs = moment(series.scaled(lam), p, **kw)
    rhs = moment(series, p, **kw)
    if lhs.mode == "exact":
        ok = lhs.value <= rhs.value * (1 + 1e-12)
    else:
        ok = lhs.value <= rhs.value + 3 * math.hypot(lhs.stderr, rhs.stderr)
    return lhs.value, rhs.value, bool(ok)


def kahane_ratio(series: SignSeries, p: float, r: float, **kw) -> float:
    """``p``-moment over ``r``-moment of the same series."""
    if p < 1 or r < 1:
        raise DomainError("exponents must be >= 1")
    return moment(series, p, **kw).value / moment(series, r, **kw).value


def _is_nested_family(Js: Sequence[DyadicInterval]) -> bool:
    for a in Js:
        for b in Js:
            if a is b:
                continue
            if a.interval().intersects(b.interval()) and not (a.contains(b) or b.contains(a)):
                return False
    return len(set(Js)) == len(Js)


def stein_averaging_check(fs: Sequence[GridFunction], Js: Sequence[DyadicInterval],
                          I: Interval, p: float):
    """Dyadic averaging inside a Rademacher sum.

    ``lhs = (int_I E||sum eps_J 1_J(x) <f_J>_J||^p dx)^(1/p)`` and ``rhs`` the
    same with ``f_J(x)`` in place of the average.  Returns ``(lhs, rhs, lhs/rhs)``.
    """
    if not 1 < p < math.inf:
        raise DomainError("p must lie in (1, inf)")
    if len(fs) != len(Js) or not Js:
        raise PreconditionError("need one function per interval")
    if not _is_nested_family(Js):
        raise PreconditionError("intervals must be distinct dyadic intervals forming a nested family")
    grid, space = fs[0].grid, fs[0].space
    i0, i1 = grid.index_range(I)
    npts, n = i1 - i0, len(Js)
    avg_terms = np.zeros((npts, n, space.dim))
    raw_terms = np.zeros((npts, n, space.dim))
    for m, (f, J) in enumerate(zip(fs, Js)):
        if not I.contains(J):
            raise PreconditionError(f"{J} is not inside {I}")
        a, b = grid.index_range(J)
        avg_terms[a - i0: b - i0, m] = average(f, J.interval())
        raw_terms[a - i0: b - i0, m] = f.samples[a:b]
    # only the intervals containing a point carry a nonzero term there
    lhs = _integrate_pointwise(avg_terms, p, space, grid.step)
    rhs = _integrate_pointwise(raw_terms, p, space, grid.step)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return lhs, rhs, ratio


def _integrate_pointwise(terms: np.ndarray, p: float, space: VectorSpace, step: float) -> float:
    active = np.any(terms != 0, axis=(0, 2))
    terms = terms[:, active]
    if terms.shape[1] > EXACT_THRESHOLD:
        raise PreconditionError("too many overlapping intervals for exact enumeration")
    vals = expected_power_norm(terms, p, space)
    return float(np.sum(vals) * step) ** (1.0 / p)
