"""Weight functions (means) and entropy generators.

A weight function is a symmetric concave mean ``theta(s, t)`` on positive
pairs together with its two partial derivatives.  Entropy generators are
convex functions ``phi`` with their first two derivatives; each one induces
the weight ``(s - t) / (phi'(s) - phi'(t))``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

EPS_THETA = 1e-8
_SERIES_CUTOFF = 1e-3
_SERIES_TERMS = 7


@dataclass(frozen=True)
class EntropyGenerator:
    phi: Callable
    phi_prime: Callable
    phi_second: Callable
    lower_bounded: bool = True
    label: str = "phi"
    alpha: float | None = None


@dataclass(frozen=True)
class WeightFunction:
    """``theta(s, t)`` and ``grad(s, t) -> (d/ds, d/dt)``, both vectorized."""

    theta: Callable
    grad: Callable
    label: str
    homogeneous: bool = True
    m_theta: float | None = None  # closed-form constant when known

    def __call__(self, s, t):
        return self.theta(s, t)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 1.0 <= alpha <= 2.0:
        raise ValueError(f"alpha must lie in [1, 2], got {alpha}")
    return alpha


def phi_alpha(alpha: float) -> EntropyGenerator:
    alpha = _check_alpha(alpha)
    if alpha == 1.0:
        def phi(t):
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                tlogt = np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0)
            return tlogt - t + 1.0

        def dphi(t):
            return np.log(np.asarray(t, dtype=float))

        def d2phi(t):
            return 1.0 / np.asarray(t, dtype=float)

        return EntropyGenerator(phi, dphi, d2phi, True, "alpha:1", 1.0)

    a = alpha - 1.0

    def phi(t):
        t = np.asarray(t, dtype=float)
        return (t**alpha - t) / a - t + 1.0

    def dphi(t):
        t = np.asarray(t, dtype=float)
        return (alpha * t**a - 1.0) / a - 1.0

    def d2phi(t):
        t = np.asarray(t, dtype=float)
        return alpha * t ** (alpha - 2.0)

    return EntropyGenerator(phi, dphi, d2phi, True, f"alpha:{alpha:g}", alpha)


# --------------------------------------------------------------------------
# power means: theta(s, t) = hi^(1-a) / ((1+a) h(u)),  u = lo/hi - 1,
# h(u) = ((1+u)^a - 1) / (a u)  (log1p(u)/u when a = 0)


def _series_coeffs(a: float) -> np.ndarray:
    b = np.empty(_SERIES_TERMS)
    prod = 1.0
    for k in range(_SERIES_TERMS):
        if k:
            prod *= a - k
        b[k] = prod / math.factorial(k + 1)
    return b


def _h_and_dh(u: np.ndarray, a: float, coeffs: np.ndarray):
    small = np.abs(u) < _SERIES_CUTOFF
    us = np.where(small, u, 0.0)
    h_s = np.polynomial.polynomial.polyval(us, coeffs)
    dh_s = np.polynomial.polynomial.polyval(us, coeffs[1:] * np.arange(1, coeffs.size))
    ub = np.where(small, -0.5, u)
    lg = np.log1p(ub)
    if a == 0.0:
        h_b = lg / ub
        dh_b = (ub / (1.0 + ub) - lg) / ub**2
    else:
        em = np.expm1(a * lg)
        h_b = em / (a * ub)
        dh_b = (a * ub * np.exp((a - 1.0) * lg) - em) / (a * ub**2)
    return np.where(small, h_s, h_b), np.where(small, dh_s, dh_b)


def _power_mean(alpha: float):
    a = alpha - 1.0
    coeffs = _series_coeffs(a)
    scale = 1.0 / alpha

    def _prep(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(s <= 0) or np.any(t <= 0):
            raise ValueError("weight functions need strictly positive arguments")
        hi = np.maximum(s, t)
        lo = np.minimum(s, t)
        return s, t, hi, lo, lo / hi - 1.0

    def theta(s, t):
        _, _, hi, _, u = _prep(s, t)
        h, _ = _h_and_dh(u, a, coeffs)
        return scale * hi ** (1.0 - a) / h

    def grad(s, t):
        s, t, hi, lo, u = _prep(s, t)
        h, dh = _h_and_dh(u, a, coeffs)
        base = scale * hi ** (-a)
        d_lo = base * (-dh / h**2)
        d_hi = base * ((1.0 - a) / h + (lo / hi) * dh / h**2)
        s_is_hi = s >= t
        return np.where(s_is_hi, d_hi, d_lo), np.where(s_is_hi, d_lo, d_hi)

    return theta, grad


def theta_alpha(alpha: float) -> WeightFunction:
    alpha = _check_alpha(alpha)
    if alpha == 2.0:
        def theta(s, t):
            s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
            if np.any(s <= 0) or np.any(t <= 0):
                raise ValueError("weight functions need strictly positive arguments")
            return np.full(s.shape, 0.5)

        def grad(s, t):
            s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
            return np.zeros(s.shape), np.zeros(t.shape)

        return WeightFunction(theta, grad, "alpha:2", True, 1.0)
    theta, grad = _power_mean(alpha)
    label = "log" if alpha == 1.0 else f"alpha:{alpha:g}"
    return WeightFunction(theta, grad, label, True, m_theta_closed_form(alpha))


def log_mean() -> WeightFunction:
    return theta_alpha(1.0)


def arithmetic_mean() -> WeightFunction:
    def theta(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(s <= 0) or np.any(t <= 0):
            raise ValueError("weight functions need strictly positive arguments")
        return 0.5 * (s + t)

    def grad(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        return np.full(s.shape, 0.5), np.full(t.shape, 0.5)

    return WeightFunction(theta, grad, "arith", True, 1.0)


def theta_from_phi(gen: EntropyGenerator, eps: float = EPS_THETA) -> WeightFunction:
    """Generic weight (s - t) / (phi'(s) - phi'(t)) with a diagonal switch."""
    f1, f2 = gen.phi_prime, gen.phi_second

    def _near(s, t):
        return np.abs(s - t) < eps * np.maximum(s, t)

    def theta(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        if np.any(s <= 0) or np.any(t <= 0):
            raise ValueError("weight functions need strictly positive arguments")
        near = _near(s, t)
        dphi = f1(s) - f1(t)
        if np.any((dphi == 0) & ~near):
            raise ValueError("degenerate generator: phi' takes equal values at distinct points")
        safe = np.where(near, 1.0, dphi)
        off = (s - t) / safe
        return np.where(near, 1.0 / f2(0.5 * (s + t)), off)

    def grad(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        near = _near(s, t)
        dphi = f1(s) - f1(t)
        safe = np.where(near, 1.0, dphi)
        ds = (dphi - (s - t) * f2(s)) / safe**2
        dt = (-dphi + (s - t) * f2(t)) / safe**2
        # on the diagonal both partials equal half the slope of 1/phi''
        mid = 0.5 * (s + t)
        h = 1e-5 * mid
        diag = 0.25 * (1.0 / f2(mid + h) - 1.0 / f2(mid - h)) / h
        return np.where(near, diag, ds), np.where(near, diag, dt)

    m = m_theta_closed_form(gen.alpha) if gen.alpha is not None else None
    return WeightFunction(theta, grad, f"theta[{gen.label}]", gen.alpha is not None, m)


def weight_for_generator(gen: EntropyGenerator) -> WeightFunction:
    """Closed-form weight for builtin generators, the generic one otherwise."""
    if gen.alpha is not None:
        return theta_alpha(gen.alpha)
    return theta_from_phi(gen)


def parse_theta(spec: str) -> WeightFunction:
    spec = spec.strip().lower()
    if spec in ("log", "log-mean", "logmean"):
        return log_mean()
    if spec in ("arith", "arithmetic"):
        return arithmetic_mean()
    if spec.startswith("alpha:"):
        return theta_alpha(float(spec.split(":", 1)[1]))
    raise ValueError(f"unknown weight specification {spec!r}")


def parse_phi(spec: str) -> EntropyGenerator:
    spec = spec.strip()
    if spec.lower().startswith("alpha:"):
        return phi_alpha(float(spec.split(":", 1)[1]))
    if spec.lower() == "log":
        return phi_alpha(1.0)
    return generator_from_table(spec)


def generator_from_table(path) -> EntropyGenerator:
    """Entropy generator from a CSV with columns t, phi, dphi, d2phi."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 4 or data.shape[0] < 3:
        raise ValueError("generator table needs at least three rows of t, phi, dphi, d2phi")
    t = data[:, 0]
    if np.any(np.diff(t) <= 0) or t[0] <= 0:
        raise ValueError("table abscissae must be positive and increasing")
    if np.any(data[:, 3] <= 0):
        raise ValueError("phi'' must be positive for a convex generator")
    cols = [PchipInterpolator(t, data[:, k], extrapolate=True) for k in (1, 2, 3)]
    return EntropyGenerator(cols[0], cols[1], cols[2], True, f"table:{path}", None)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


# --------------------------------------------------------------------------
# the constant M_theta


def m_theta_closed_form(alpha: float) -> float:
    alpha = _check_alpha(alpha)
    if alpha <= 1.5 or alpha == 2.0:
        return 1.0
    return 1.0 / (2.0 * (alpha - 1.0))


def _ratio(theta: WeightFunction, s, t):
    return (theta(s, s) + theta(t, t)) / (2.0 * theta(s, t))


def m_theta_numeric(theta: WeightFunction, lam_max: float = 1e6, grid: int = 4000):
    """Enclosure ``(lo, hi)`` of the infimum defining M_theta over a log grid.

    ``hi`` is the smallest sampled ratio.  ``lo`` subtracts the largest
    change of the ratio between the minimizing grid point and its
    neighbours, a heuristic allowance for dips between samples.  For
    homogeneous weights the search is over (1, lam) only; otherwise a
    two-dimensional grid over [1/lam_max, lam_max]^2 is used.
    """
    if lam_max <= 1 or grid < 2:
        raise ValueError("need lam_max > 1 and at least two grid points")
    if theta.homogeneous:
        lam = np.geomspace(1.0, lam_max, grid + 1)[1:]
        r = _ratio(theta, np.ones_like(lam), lam)
        k = int(np.argmin(r))
        hi = float(r[k])
        nb = [abs(r[j] - r[k]) for j in (k - 1, k + 1) if 0 <= j < r.size]
        return hi - max(nb, default=0.0), hi
    side = min(grid, 400)
    pts = np.geomspace(1.0 / lam_max, lam_max, side)
    s, t = np.meshgrid(pts, pts, indexing="ij")
    r = _ratio(theta, s, t)
    i, j = np.unravel_index(int(np.argmin(r)), r.shape)
    hi = float(r[i, j])
    nb = [abs(r[a, b] - hi) for a, b in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1))
          if 0 <= a < side and 0 <= b < side]
    return hi - max(nb, default=0.0), hi


@dataclass
class WeightReport:
    ok: bool
    symmetry_error: float
    concavity_violation: float
    gradient_error: float


def check_weight(theta: WeightFunction, n_pairs: int = 1000, seed: int = 0) -> WeightReport:
    """Randomized checks of symmetry, midpoint concavity and the gradient."""
    rng = np.random.default_rng(seed)
    s, t, s2, t2 = np.exp(rng.uniform(-5, 5, size=(4, n_pairs)))
    v = theta(s, t)
    sym = float(np.max(np.abs(v - theta(t, s)) / (1.0 + np.abs(v))))
    mid = theta(0.5 * (s + s2), 0.5 * (t + t2))
    avg = 0.5 * (v + theta(s2, t2))
    conc = float(np.max((avg - mid) / (1.0 + np.abs(avg))))
    gs, gt = theta.grad(s, t)
    hs, ht = 1e-5 * s, 1e-5 * t
    fs = (theta(s + hs, t) - theta(s - hs, t)) / (2 * hs)
    ft = (theta(s, t + ht) - theta(s, t - ht)) / (2 * ht)
    gscale = np.abs(fs) + np.abs(ft) + 1e-12
    gerr = float(np.max((np.abs(gs - fs) + np.abs(gt - ft)) / gscale))
    ok = sym <= 1e-12 and conc <= 1e-12 and gerr <= 1e-6
    return WeightReport(ok, sym, conc, gerr)
