"""Growth functions and the eta transform.

``eta(t) = t**(2-q) * int_t^inf rho(s) s**(q-3) ds``.  Constant and power
growth use closed forms; everything else goes through the substitution
``s = t e**y`` and composite Simpson, with an analytic tail bound derived from
the declared upper type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DivergenceError, DomainError

__all__ = [
    "GrowthModel",
    "EtaQuadrature",
    "eta",
    "eta_quadrature",
    "eta_model",
    "upper_type_check",
    "doubling_check",
    "default_probes",
    "truncated_eta_s",
    "truncated_eta_u",
]

PROBE_T = np.logspace(-6, 6, 49)


def default_probes() -> list[tuple[float, float]]:
    """Logarithmic ``(t, u)`` probe pairs with ``u > 1``."""
    us = np.logspace(0.05, 6, 24)
    return [(float(t), float(u)) for t in np.logspace(-6, 6, 25) for u in us]


@dataclass(frozen=True, eq=False)
class GrowthModel:
    """Positive non-decreasing ``rho`` on ``(0, inf)`` with a declared upper type.

    ``alpha`` and ``upper_constant`` are the caller's claim
    ``rho(u t) <= upper_constant * u**alpha * rho(t)``; use
    :func:`upper_type_check` to test it.
    """

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    alpha: float
    upper_constant: float = 1.0
    params: dict = field(default_factory=dict)
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind == "eta":
            return
        v = np.asarray(self.fn(PROBE_T), dtype=float)
        if not np.all(v > 0):
            raise DomainError("growth function must be positive")
        if np.any(np.diff(v) < -1e-12 * np.abs(v[1:])):
            raise DomainError("growth function must be non-decreasing")

    def __call__(self, t):
        if np.ndim(t) == 0:
            t = float(t)
            if t not in self._memo:
                self._memo[t] = float(self.fn(np.array([t]))[0])
            return self._memo[t]
        return np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=float)

    @classmethod
    def constant(cls, c: float = 1.0) -> "GrowthModel":
        return cls("constant", lambda t: np.full(np.shape(t), float(c)), 0.0, 1.0, {"c": float(c)})

    @classmethod
    def power(cls, alpha: float, c: float = 1.0) -> "GrowthModel":
        if alpha < 0:
            raise DomainError("a power growth function needs alpha >= 0")
        return cls("power", lambda t: c * np.asarray(t, dtype=float) ** alpha, alpha, 1.0,
                   {"alpha": float(alpha), "c": float(c)})

    @classmethod
    def log_power(cls, beta: float, gamma: float, alpha: float, upper_constant: float) -> "GrowthModel":
        """``t**beta * log(e + t)**gamma``; the caller declares its upper type."""
        def fn(t):
            t = np.asarray(t, dtype=float)
            return t ** beta * np.log(math.e + t) ** gamma
        return cls("log-power", fn, alpha, upper_constant, {"beta": beta, "gamma": gamma})

    @classmethod
    def sampled(cls, ts: Sequence[float], values: Sequence[float], alpha: float,
                upper_constant: float = 1.0) -> "GrowthModel":
        """Log-log interpolation of samples; flat below the first, slope ``alpha`` above the last."""
        lt, lv = np.log(np.asarray(ts, float)), np.log(np.asarray(values, float))

        def fn(t):
            x = np.log(np.asarray(t, dtype=float))
            y = np.interp(x, lt, lv)
            return np.exp(np.where(x > lt[-1], lv[-1] + alpha * (x - lt[-1]), y))
        return cls("sampled", fn, alpha, upper_constant, {"ts": list(ts), "values": list(values)})

    @classmethod
    def from_spec(cls, spec: dict) -> "GrowthModel":
        kind = spec.get("kind", "constant")
        if kind == "constant":
            return cls.constant(spec.get("c", 1.0))
        if kind == "power":
            return cls.power(spec["alpha"], spec.get("c", 1.0))
        if kind == "log-power":
            return cls.log_power(spec["beta"], spec["gamma"], spec["alpha"], spec.get("C", 1.0))
        if kind == "sampled":
            return cls.sampled(spec["ts"], spec["values"], spec["alpha"], spec.get("C", 1.0))
        raise DomainError(f"unknown growth kind {kind!r}")

    def spec(self) -> dict:
        return {"kind": self.kind, **{k: v for k, v in self.params.items() if k != "source"}}


@dataclass(frozen=True)
class EtaQuadrature:
    value: float
    y_max: float
    tail_bound: float
    nodes: int


def _closed_form(gm: GrowthModel, q: float, t: float) -> float | None:
    if gm.kind == "constant":
        return gm.params["c"] / (2 - q)
    if gm.kind == "power":
        a = gm.params["alpha"]
        if a >= 2 - q:
            raise DivergenceError(f"eta diverges for power growth with alpha={a} >= 2-q")
        return gm.params["c"] * t ** a / (2 - q - a)
    return None


def eta_quadrature(gm: GrowthModel, q: float, t: float, cutoff: float | None = None,
                   rel_tail: float = 1e-10, h: float = 0.02) -> EtaQuadrature:
    """``eta(t) = int_0^inf rho(t e**y) e**((q-2) y) dy`` by composite Simpson.

    Without ``cutoff`` the range ``[0, y_max]`` is chosen so that the tail
    bound ``C rho(t) e**((alpha+q-2) y_max) / (2-q-alpha)`` is below
    ``rel_tail * rho(t)``.  With ``cutoff = S`` the integral stops at
    ``s = S`` and no tail bound is claimed (``tail_bound = nan``).
    """
    if not t > 0:
        raise DomainError("eta needs t > 0")
    gap = 2 - q - gm.alpha
    if cutoff is not None:
        y_max = math.log(cutoff / t)
        if y_max <= 0:
            return EtaQuadrature(0.0, 0.0, math.nan, 0)
        tail = math.nan
    else:
        if gap <= 0:
            raise DivergenceError(
                f"declared upper type {gm.alpha} >= 2-q={2 - q}: no tail bound without a cutoff")
        y_max = math.log(gm.upper_constant / (gap * rel_tail)) / gap
        # keep t e^y finite; the reported tail bound then exceeds rel_tail
        y_max = min(y_max, math.log(1e300 / max(t, 1.0)))
        tail = gm.upper_constant * gm(t) * math.exp(-gap * y_max) / gap
    n = max(2, int(math.ceil(y_max / h)))
    n += n % 2
    y = np.linspace(0.0, y_max, n + 1)
    vals = gm(t * np.exp(y)) * np.exp((q - 2) * y)
    return EtaQuadrature(float(integrate.simpson(vals, x=y)), y_max, tail, n + 1)


def eta(gm: GrowthModel, q: float, t: float, cutoff: float | None = None) -> float:
    if not 1 < q < 2:
        raise DomainError("eta is defined for q in (1, 2)")
    if not t > 0:
        raise DomainError("eta needs t > 0")
    if cutoff is None:
        closed = _closed_form(gm, q, t)
        if closed is not None:
            return closed
    return eta_quadrature(gm, q, t, cutoff).value


def eta_model(gm: GrowthModel, q: float) -> GrowthModel:
    """``eta`` packaged as a growth function (same declared upper type as ``rho``)."""
    return GrowthModel("eta", lambda t: np.array([eta(gm, q, float(s)) for s in np.ravel(t)]).reshape(np.shape(t)),
                       gm.alpha, gm.upper_constant,
                       {"source": gm, "q": q})


def upper_type_check(gm: GrowthModel, alpha: float,
                     probes: Sequence[tuple[float, float]] | None = None,
                     bound: float = 100.0) -> tuple[bool, float]:
    """Largest ``rho(u t) / (u**alpha rho(t))`` over probe pairs."""
    probes = default_probes() if probes is None else probes
    pr = np.asarray(probes, dtype=float)
    t, u = pr[:, 0], pr[:, 1]
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = gm(u * t) / (u ** alpha * gm(t))
    worst = float(np.max(ratio))
    if math.isnan(worst):
        worst = math.inf
    return bool(math.isfinite(worst) and worst <= bound), worst


def doubling_check(gm: GrowthModel, probes: Sequence[float] | None = None,
                   bound: float = 100.0) -> tuple[bool, float]:
    """Largest ``rho(2t) / rho(t)`` over probes."""
    ts = PROBE_T if probes is None else np.asarray(probes, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = gm(2 * ts) / gm(ts)
    worst = float(np.max(ratio))
    if math.isnan(worst):
        worst = math.inf
    return bool(math.isfinite(worst) and worst <= bound), worst


def _scalar(gm: GrowthModel, s: float) -> float:
    return float(gm.fn(np.array([s]))[0])


def truncated_eta_s(gm: GrowthModel, q: float, t: float, S: float) -> float:
    """``t**(2-q) int_t^S rho(s) s**(q-3) ds`` by adaptive quadrature in ``s``."""
    val, _ = integrate.quad(lambda s: _scalar(gm, s) * s ** (q - 3), t, S, epsabs=0, epsrel=1e-12, limit=500)
    return t ** (2 - q) * val


def truncated_eta_u(gm: GrowthModel, q: float, t: float, S: float) -> float:
    """``int_1^(S/t) rho(t u) u**(q-3) du`` by adaptive quadrature in ``u``."""
    val, _ = integrate.quad(lambda u: _scalar(gm, t * u) * u ** (q - 3), 1.0, S / t, epsabs=0, epsrel=1e-12, limit=500)
    return val
