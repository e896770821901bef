"""Experiment drivers behind the command line.

Each driver takes an :class:`ExperimentConfig`, runs a corpus and returns a
:class:`RunReport` made of per-case rows plus a summary.  Everything is
deterministic given the config; Monte Carlo streams are keyed by
``(seed, case index)``.
"""

from __future__ import annotations

import dataclasses
import json
import math
import traceback
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import gamma

from .corpus import array_corpus, decaying_array, function_corpus
from .dyadic import (Grid, Interval, VectorSpace, dyadic_family, dyadics_within,
                     interval_family, unique_intervals)
from .errors import DomainError
from .growth import GrowthModel, doubling_check, eta, eta_model, eta_quadrature, upper_type_check
from .norms import (bmo_norm, carleson_norm, carleson_scalar_p2,
                    carleson_scalar_squarefn, jn_p_norm)
from .randsign import SignSeries, contraction_check, kahane_ratio, moment
from .synthesis import (SynthesisCutoffs, annular_decompose, holder_weight_check,
                        individual_bound_check, oscillation_growth_check, piece_ratios, synthesize)
from .wavelets import KernelSpec, WaveletModel, kernel_size_check, random_sign_coefficients, wavelet_coefficients
from .weights import WeightModel, aq_constant, canonical_family

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunReport",
    "theorem_a_family",
    "bmo_family",
    "piece_intervals",
    "run_theorem_a",
    "run_theorem_b",
    "run_property_suite",
    "hincin_bounds",
]

# Empirical constants, calibrated on the default corpora and frozen with 25% headroom.
OSCILLATION_CONSTANT = 1.25 * 1.14
JN_CONSTANT = 1.25 * 3.62
KAHANE_CONSTANT = 1.25 * 1.60
PIECE_CONSTANTS = {"f1": 1.25 * 0.833, "f2": 1.25 * 0.0154, "f3": 1.25 * 0.676}
# norms below this (relative to the input's size) are rounding residue
ZERO_TOL = 1e-12


class ConfigError(DomainError):
    """An experiment configuration violates a hypothesis of the run."""


@dataclass
class ExperimentConfig:
    """Everything a run depends on.  ``M, L``: window ``[-2^M, 2^M)`` at step ``2^-L``."""

    M: int = 3
    L: int = 10
    wavelet: dict = field(default_factory=lambda: {"kind": "daubechies", "order": 4})
    weight: dict = field(default_factory=lambda: {"kind": "constant"})
    growth: dict = field(default_factory=lambda: {"kind": "constant"})
    q: float = 1.5
    p: float = 2.0
    dim: int = 1
    r: float = 2.0
    bmo_points: int = 64
    min_scale: int = -6
    seed: int = 0
    exact_threshold: int = 20
    mc_samples: int = 100_000
    n_steps: int = 6
    n_sums: int = 4
    n_arrays: int = 6
    reporting: tuple = ("-4", "4")
    refine: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.reporting = tuple(str(x) for x in cfg.reporting)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["reporting"] = list(self.reporting)
        return d

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    # -- derived objects -------------------------------------------------------

    @property
    def q_prime(self) -> float:
        return self.q / (self.q - 1)

    @property
    def space(self) -> VectorSpace:
        return VectorSpace(self.dim, self.r)

    def grid(self, L: int | None = None) -> Grid:
        return Grid.symmetric(self.M, self.L if L is None else L)

    def wavelet_model(self) -> WaveletModel:
        return WaveletModel.from_spec(self.wavelet, level=16)

    def weight_model(self, grid: Grid) -> WeightModel:
        return WeightModel.from_spec(self.weight, grid)

    def growth_model(self) -> GrowthModel:
        return GrowthModel.from_spec(self.growth)

    def reporting_interval(self) -> Interval:
        return Interval(Fraction(self.reporting[0]), Fraction(self.reporting[1]))

    def validate(self, run: str) -> None:
        if not 1 < self.q < 2:
            raise ConfigError("q must lie in (1, 2)")
        if run == "theorem-a" and not 1 < self.p <= self.q_prime:
            raise ConfigError(f"p must lie in (1, q'] = (1, {self.q_prime}]")
        if run == "theorem-b" and not 1 < self.p < math.inf:
            raise ConfigError("p must lie in (1, inf)")
        if run in ("theorem-a", "theorem-b") and not self.wavelet_model().satisfies_hypotheses:
            raise ConfigError("the wavelet must be a Daubechies wavelet of order >= 3")
        rho = self.growth_model()
        if rho.alpha >= 2 - self.q:
            raise ConfigError(f"growth upper type {rho.alpha} must be below 2 - q = {2 - self.q}")


@dataclass
class RunReport:
    kind: str
    rows: list
    summary: dict

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed", False))

    def to_json(self) -> dict:
        return {"kind": self.kind, "summary": self.summary, "rows": self.rows}


def _ratio(num: float, den: float, tol: float = 0.0) -> float:
    """``num / den``; both below ``tol`` counts as ``0 / 0 = 0`` (rounding-level norms)."""
    if den <= tol:
        return 0.0 if num <= tol else math.inf
    return num / den


def _rel_change(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(b - a) / max(abs(a), abs(b))


# -- analysis side ------------------------------------------------------------

def theorem_a_family(window: Interval, psi: WaveletModel, min_scale: int) -> list[Interval]:
    """Dyadic ``I`` whose wavelet footprint ``[inf I - (N-1)|I|, sup I + (N-1)|I|)`` fits in the window.

    Every ``J`` inside such an ``I`` has its wavelet supported in the window, so
    its coefficient is not affected by the window edge.
    """
    lo, hi = psi.psi_support
    out = []
    for J in dyadics_within(window, min_scale):
        I = J.interval()
        foot = Interval(I.left + Fraction(lo) * I.length, I.left + Fraction(hi) * I.length)
        if window.contains(foot):
            out.append(I)
    return out


def bmo_family(window: Interval, points: int, min_scale: int) -> list[Interval]:
    return unique_intervals(interval_family(window, points) + dyadic_family(window, min_scale))


def run_theorem_a(cfg: ExperimentConfig, progress: Callable[[str], None] | None = None) -> RunReport:
    """Carleson norm (with eta) of the coefficients against the BMO norm (with rho), per corpus case."""
    cfg.validate("theorem-a")
    psi = cfg.wavelet_model()
    rho = cfg.growth_model()
    eta_rho = eta_model(rho, cfg.q)
    cases = function_corpus(cfg.seed, psi, cfg.n_steps, cfg.n_sums, dim=cfg.dim)
    levels = [cfg.L, cfg.L + 1] if cfg.refine else [cfg.L]
    rows = []
    headline = {}
    for L in levels:
        grid = cfg.grid(L)
        w = cfg.weight_model(grid)
        bfam = bmo_family(grid.window, cfg.bmo_points, cfg.min_scale)
        cfam = theorem_a_family(grid.window, psi, cfg.min_scale)
        top = max(I.as_dyadic().scale for I in cfam)
        best = 0.0
        for i, case in enumerate(cases):
            f = case.sample(grid, cfg.space)
            b = bmo_norm(f, w, rho, bfam)
            a = wavelet_coefficients(psi, f, cfg.min_scale, top)
            c = carleson_norm(a, w, eta_rho, cfg.p, cfam, cfg.min_scale, cfg.exact_threshold,
                              cfg.mc_samples, seed=cfg.seed * 7919 + i)
            ratio = _ratio(c.value, b.value, ZERO_TOL * max(1.0, float(np.max(f.norms()))))
            best = max(best, ratio)
            rows.append({"case": case.name, "index": i, "L": L, "bmo": b.value, "carleson": c.value,
                         "ratio": ratio, "mode": c.mode,
                         "bmo_interval": str(b.interval), "carleson_interval": str(c.interval)})
            if progress:
                progress(f"L={L} case {i} {case.name}: ratio {ratio:.6g}")
        headline[L] = best
    summary = {"headline": headline[cfg.L], "headlines": {str(k): v for k, v in headline.items()},
               "cases": len(cases), "p": cfg.p, "q": cfg.q, "finite": all(math.isfinite(v) for v in headline.values())}
    passed = summary["finite"]
    if cfg.refine:
        change = _rel_change(headline[cfg.L], headline[cfg.L + 1])
        summary["refinement_change"] = change
        summary["stable"] = change < 0.10
        passed = passed and summary["stable"]
    summary["passed"] = bool(passed)
    return RunReport("theorem-a", rows, summary)


# -- synthesis side -----------------------------------------------------------

def piece_intervals(I0: Interval) -> list[Interval]:
    """Reporting intervals for the per-piece bounds: ``I0`` and a few small ones inside it."""
    c, h = I0.centre, I0.length
    return [I0, Interval(c - h / 8, c + h / 8), Interval(c, c + h / 32), Interval(c + h / 8, c + h / 8 + h / 128)]


def run_theorem_b(cfg: ExperimentConfig, progress: Callable[[str], None] | None = None) -> RunReport:
    """BMO norm (with eta) of the synthesized ``f_I`` against the Carleson norm (with rho)."""
    cfg.validate("theorem-b")
    psi = cfg.wavelet_model()
    rho = cfg.growth_model()
    eta_rho = eta_model(rho, cfg.q)
    grid = cfg.grid()
    w = cfg.weight_model(grid)
    I0 = cfg.reporting_interval()
    radius = grid.window.right
    cases = array_corpus(cfg.seed, cfg.n_arrays, Interval(I0.left / 2, I0.right / 2), cfg.space)
    depths = [cfg.min_scale, cfg.min_scale - 1] if cfg.refine else [cfg.min_scale]
    bfam = bmo_family(I0, cfg.bmo_points, cfg.min_scale)
    rows = []
    headline = {}
    pieces = {"f1": 0.0, "f2": 0.0, "f3": 0.0}
    individual_ok = True
    for m in depths:
        cfam = dyadic_family(grid.window, m)
        cut = SynthesisCutoffs(m, cfg.M, radius)
        best = 0.0
        for i, case in enumerate(cases):
            a = case.build(m)
            c = carleson_norm(a, w, rho, cfg.p, cfam, m, cfg.exact_threshold, cfg.mc_samples,
                              seed=cfg.seed * 7919 + i)
            res = synthesize(a, psi, I0, cut, cfg.L)
            b = bmo_norm(res.f_I, w, eta_rho, bfam)
            scale = max((float(np.max(np.abs(v))) for _, v in a.items()), default=0.0)
            ratio = _ratio(b.value, c.value, ZERO_TOL * max(1.0, scale))
            best = max(best, ratio)
            row = {"case": case.name, "index": i, "min_scale": m, "carleson": c.value, "bmo": b.value,
                   "ratio": ratio, "mode": c.mode, "tail_bound": res.tail_bound}
            if m == cfg.min_scale and c.value > 0:
                an = a.scaled(1.0 / c.value)
                for J, _ in a.items():
                    individual_ok &= individual_bound_check(a, w, rho, J, c.value)
                for I in piece_intervals(I0):
                    pr = piece_ratios(synthesize(an, psi, I, cut, cfg.L), w, rho, cfg.q, eta_rho=eta_rho)
                    for k in pieces:
                        pieces[k] = max(pieces[k], pr[k])
                        row[f"piece_{k}"] = max(row.get(f"piece_{k}", 0.0), pr[k])
            rows.append(row)
            if progress:
                progress(f"min_scale={m} case {i} {case.name}: ratio {ratio:.6g}")
        headline[m] = best
    summary = {"headline": headline[cfg.min_scale], "headlines": {str(k): v for k, v in headline.items()},
               "cases": len(cases), "p": cfg.p, "q": cfg.q, "piece_constants": pieces,
               "individual_bounds": bool(individual_ok),
               "finite": all(math.isfinite(v) for v in headline.values())}
    passed = summary["finite"] and individual_ok
    if cfg.refine:
        change = _rel_change(headline[cfg.min_scale], headline[cfg.min_scale - 1])
        summary["refinement_change"] = change
        summary["stable"] = change < 0.10
        passed = passed and summary["stable"]
    summary["passed"] = bool(passed)
    return RunReport("theorem-b", rows, summary)


# -- property suite -----------------------------------------------------------

def hincin_bounds(p: float) -> tuple[float, float]:
    """Sharp ``A_p, B_p`` with ``A_p |a|_2 <= (E|sum eps a|^p)^(1/p) <= B_p |a|_2``."""
    p0 = 1.8474
    if p >= 2:
        low, high = 1.0, math.sqrt(2) * (gamma((p + 1) / 2) / math.sqrt(math.pi)) ** (1 / p)
    else:
        high = 1.0
        low = 2 ** (0.5 - 1 / p) if p <= p0 else math.sqrt(2) * (gamma((p + 1) / 2) / math.sqrt(math.pi)) ** (1 / p)
    return low, high


def _case(results: dict, name: str, fn: Callable[[], tuple]) -> None:
    """Run one check; module errors are recorded instead of propagated."""
    try:
        ok, measured = fn()
        results[name] = {"passed": bool(ok), "measured": measured}
    except Exception as exc:  # noqa: BLE001 - the suite reports every failure mode
        results[name] = {"passed": False, "error": type(exc).__name__, "message": str(exc),
                         "where": traceback.format_exception_only(type(exc), exc)[-1].strip()}


def run_property_suite(cfg: ExperimentConfig) -> RunReport:
    """Identities and inequalities checked at desk scale, one record per check."""
    results: dict = {}
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.grid()
    psi = cfg.wavelet_model()
    rho = cfg.growth_model()

    def weight():
        return cfg.weight_model(grid)

    def eta_checks():
        worst = 0.0
        ok = True
        for t in np.logspace(-3, 3, 13):
            e = eta(rho, cfg.q, float(t))
            ok &= e >= rho(float(t))
            if rho.kind in ("constant", "power"):
                quad = eta_quadrature(rho, cfg.q, float(t)).value
                worst = max(worst, abs(quad - e) / e)
        return ok and worst < 1e-6, {"closed_vs_quadrature": worst}
    _case(results, "eta", eta_checks)

    def growth_checks():
        ok1, up = upper_type_check(rho, rho.alpha)
        ok2, dbl = doubling_check(rho)
        return ok1 and ok2, {"upper_type": up, "doubling": dbl}
    _case(results, "growth-model", growth_checks)

    def aq():
        cert = aq_constant(weight(), cfg.q, canonical_family(grid.window, -4))
        return math.isfinite(cert.constant), {"constant": cert.constant, "doubling": cert.doubling}
    _case(results, "aq-constant", aq)

    def holder():
        w = weight()
        worst = 0.0
        ok = True
        for J in dyadics_within(grid.window, -3):
            for p in (1.5, 2.0, 3.0):
                lhs, rhs, passed = holder_weight_check(w, J, p)
                ok &= passed
                worst = max(worst, lhs / rhs)
        return ok, {"max_lhs_over_rhs": worst}
    _case(results, "holder-weight", holder)

    corpus = function_corpus(cfg.seed, psi, 2, 2, dim=cfg.dim)

    def oscillation():
        w = weight()
        worst = 0.0
        base = bmo_family(grid.window, 32, -3)
        for case in corpus:
            f = case.sample(grid, cfg.space)
            for I in (Interval(Fraction(-1, 2), Fraction(1, 2)), Interval(0, Fraction(1, 4)), Interval(-1, 0)):
                fam = unique_intervals(base + [I.dilate(2 ** k) for k in range(4)])
                b = bmo_norm(f, w, rho, fam).value
                if b == 0:
                    continue
                g = f * (1.0 / b)
                for l in (1, 2, 3):
                    worst = max(worst, oscillation_growth_check(g, w, rho, I, l)[2])
        return worst <= OSCILLATION_CONSTANT, {"max_ratio": worst}
    _case(results, "oscillation-growth", oscillation)

    def jn():
        w = weight()
        fam = bmo_family(grid.window, 32, -3)
        worst, exact = 0.0, True
        for case in corpus:
            f = case.sample(grid, cfg.space)
            b = bmo_norm(f, w, rho, fam).value
            exact &= jn_p_norm(f, w, rho, 1.0, fam).value == b
            for p in (1.5, 2.0, cfg.q_prime):
                j = jn_p_norm(f, w, rho, p, fam).value
                if b > 0:
                    worst = max(worst, j / b)
        return exact and worst <= JN_CONSTANT, {"max_ratio": worst, "p1_identical": exact}
    _case(results, "john-nirenberg", jn)

    def annular():
        f = corpus[2].sample(grid, cfg.space)
        I = Interval(Fraction(-1, 2), Fraction(1, 2))
        pieces = annular_decompose(f, I, 3)
        mean = f.restrict(I).mean(axis=0)
        i0, i1 = grid.index_range(I.dilate(8))
        total = sum(pc.function.samples for pc in pieces)[i0:i1] + mean
        err = float(np.max(np.abs(total - f.samples[i0:i1])))
        return err <= 1e-12 * max(1.0, float(np.max(np.abs(f.samples[i0:i1])))), {"max_error": err}
    _case(results, "annular-reconstruction", annular)

    def p2_identity():
        w = weight()
        worst = 0.0
        for s in range(5):
            a = decaying_array(cfg.seed * 100 + s, Interval(-2, 2), 0, 0.7).build(-3)
            fam = dyadic_family(grid.window, -3)
            c1 = carleson_norm(a, w, rho, 2.0, fam, -3).value
            c2 = carleson_scalar_p2(a, w, rho, fam, -3).value
            c3 = carleson_scalar_squarefn(a, w, rho, 2.0, fam, -3).value
            worst = max(worst, abs(c1 - c2) / c2, abs(c3 - c2) / c2)
        return worst <= 1e-10, {"max_relative_gap": worst}
    _case(results, "carleson-p2-identity", p2_identity)

    def contraction():
        ok = True
        for _ in range(50):
            n = int(rng.integers(1, 11))
            xi = SignSeries(rng.normal(size=(n, cfg.dim)), cfg.space)
            lam = rng.uniform(-1, 1, n)
            ok &= contraction_check(xi, lam, 2.0)[2]
        return ok, {"cases": 50}
    _case(results, "contraction", contraction)

    def kahane():
        worst, mono = 0.0, True
        for _ in range(50):
            n = int(rng.integers(1, 11))
            xi = SignSeries(rng.normal(size=(n, cfg.dim)), cfg.space)
            m = [moment(xi, p).value for p in (1, 2, 4)]
            mono &= m[0] <= m[1] * (1 + 1e-12) and m[1] <= m[2] * (1 + 1e-12)
            worst = max(worst, kahane_ratio(xi, 2, 1), kahane_ratio(xi, 4, 2), kahane_ratio(xi, 4, 1))
        return mono and worst <= KAHANE_CONSTANT, {"max_ratio": worst}
    _case(results, "kahane", kahane)

    def kernel():
        base = KernelSpec(psi, psi, -4, 4, random_sign_coefficients(cfg.seed))
        pairs = []
        for _ in range(40):
            x = float(rng.uniform(-2, 2))
            pairs.append((x, x + float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0))))
        small, _ = kernel_size_check(base, pairs)
        large, ok = kernel_size_check(base.with_range(-6, 6), pairs)
        change = _rel_change(small, large)
        return ok and change < 0.05, {"small_range": small, "large_range": large, "change": change}
    _case(results, "kernel-size", kernel)

    passed = all(r["passed"] for r in results.values())
    summary = {"passed": passed, "checks": len(results),
               "failed": sorted(k for k, r in results.items() if not r["passed"])}
    rows = [{"check": k, **{kk: json.dumps(v, sort_keys=True) if isinstance(v, dict) else v
                            for kk, v in r.items()}} for k, r in sorted(results.items())]
    return RunReport("properties", rows, {**summary, "results": results})
