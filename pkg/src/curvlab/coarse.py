"""Exact optimal transport on finite graphs and coarse Ricci curvatures.

Discrete-time curvatures compare one step of a stochastic matrix P from x
and from y; continuous-time ones use the generator L through the short-time
kernel I + sL or through couplings of the jump rates.  Distances are the
unweighted graph distance of the transition support.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import linprog

from .chain import MappingChain, build_generator, distance_from_generator

MASS_TOL = 1e-12
ZERO_FLAG = 1e-12


class TransportError(ValueError):
    pass


@dataclass
class TransportResult:
    value: float  # W_p
    cost: float  # W_p^p
    plan: np.ndarray
    dual_gap: float


def tv(mu, nu) -> float:
    return 0.5 * float(np.abs(np.asarray(mu, float) - np.asarray(nu, float)).sum())


# the default feasibility tolerances (1e-7) leave noise that the small-t
# difference quotients of the semigroup curvature would amplify
_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _solve(mu, nu, cost, allowed=None):
    """min <plan, cost> over couplings of (mu, nu) supported on ``allowed``.

    Returns (optimum, plan, gap) where gap combines the primal-dual objective
    difference and the largest reduced-cost violation of the HiGHS duals.
    None is returned when the support-constrained problem is infeasible.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.min() < -MASS_TOL or nu.min() < -MASS_TOL:
        raise TransportError("transport marginals must be nonnegative")
    if abs(mu.sum() - nu.sum()) > MASS_TOL * max(1.0, mu.sum()):
        raise TransportError(f"mass mismatch: {mu.sum()!r} vs {nu.sum()!r}")
    rows = np.flatnonzero(mu > 0)
    cols = np.flatnonzero(nu > 0)
    ok = np.ones((rows.size, cols.size), dtype=bool)
    if allowed is not None:
        ok = np.asarray(allowed)[np.ix_(rows, cols)]
    ii, jj = np.nonzero(ok)
    if ii.size == 0:
        return None
    c = cost[rows[ii], cols[jj]]
    nr, nc = rows.size, cols.size
    A = np.zeros((nr + nc, ii.size))
    A[ii, np.arange(ii.size)] = 1.0
    A[nr + jj, np.arange(ii.size)] = 1.0
    b = np.concatenate([mu[rows], nu[cols]])
    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs", options=_LP_OPTIONS)
    if res.status == 2:
        # presolve can misjudge feasibility when some masses are ~1e-12
        res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs",
                      options={**_LP_OPTIONS, "presolve": False})
    if res.status == 2:
        return None
    if res.status != 0:
        raise TransportError(f"LP solver failed: {res.message}")
    duals = res.eqlin.marginals
    dual_value = float(duals @ b)
    reduced = c - A.T @ duals
    gap = max(abs(res.fun - dual_value), float(max(0.0, -reduced.min())))
    plan = np.zeros((mu.size, nu.size))
    plan[rows[ii], cols[jj]] = res.x
    return float(res.fun), plan, gap


def wasserstein_p(mu, nu, d, p: float = 1.0) -> TransportResult:
    """Exact W_p between two probability vectors for the metric ``d``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    d = np.asarray(d, dtype=float)
    out = _solve(mu, nu, d**p)
    cost, plan, gap = out
    cost = max(cost, 0.0)
    return TransportResult(cost ** (1.0 / p), cost, plan, gap)


def retarget_coupling(plan, mu_new, mu=None) -> np.ndarray:
    """Coupling of (mu_new, nu) within total variation TV(mu_new, mu) of ``plan``.

    Rows whose mass drops are scaled down; the mass they release, column by
    column, is handed to the rows whose mass grows, in proportion to the gain.
    """
    plan = np.asarray(plan, dtype=float)
    mu = plan.sum(axis=1) if mu is None else np.asarray(mu, dtype=float)
    mu_new = np.asarray(mu_new, dtype=float)
    if abs(mu_new.sum() - mu.sum()) > MASS_TOL * max(1.0, mu.sum()):
        raise TransportError("retargeted marginal must keep the total mass")
    loss = mu_new < mu
    scale = np.ones_like(mu)
    scale[loss] = mu_new[loss] / mu[loss]
    out = plan * scale[:, None]
    released = (plan - out).sum(axis=0)
    gain = np.maximum(mu_new - mu, 0.0)
    total = gain.sum()
    if total > 0:
        out += np.outer(gain, released) / total
    return out


# --------------------------------------------------------------------------
# helpers on matrices


def _offdiag(L) -> np.ndarray:
    Q = np.array(L, dtype=float)
    np.fill_diagonal(Q, 0.0)
    if Q.min(initial=0.0) < 0:
        raise ValueError("off-diagonal rates must be nonnegative")
    return Q


def _generator(L) -> np.ndarray:
    Q = _offdiag(L)
    return Q - np.diag(Q.sum(axis=1))


def _time_scale(L) -> float:
    Q = _offdiag(L)
    top = Q.sum(axis=1).max()
    if top <= 0:
        raise ValueError("generator has no jumps: the time scale T is undefined")
    return 1.0 / top


def _pair_check(x, y):
    if x == y:
        raise ValueError("coarse curvature needs two distinct states")


def _dist(M, d):
    return distance_from_generator(_offdiag(M)) if d is None else np.asarray(d)


# --------------------------------------------------------------------------
# discrete time


def _k_dc_p(P, x, y, p, d):
    P = np.asarray(P, dtype=float)
    d = _dist(P, d)
    res = wasserstein_p(P[x], P[y], d, p)
    return 1.0 - res.value / d[x, y], res.dual_gap


def k_dc_p(P, x: int, y: int, p: float = 1.0, d=None) -> float:
    _pair_check(x, y)
    return _k_dc_p(P, x, y, p, d)[0]


def _k_dc_inf(P, x, y, d):
    P = np.asarray(P, dtype=float)
    d = _dist(P, d)
    dxy = d[x, y]
    out = _solve(P[x], P[y], d.astype(float), d <= dxy)
    if out is None:
        return -math.inf, 0.0
    return (dxy - out[0]) / dxy, out[2]


def k_dc_inf(P, x: int, y: int, d=None) -> float:
    _pair_check(x, y)
    return _k_dc_inf(P, x, y, d)[0]


# --------------------------------------------------------------------------
# continuous time


def short_time_kernel(L, s: float) -> np.ndarray:
    return np.eye(len(L)) + s * _generator(L)


def _k_cc_p(L, x, y, p, d, s=None):
    d = _dist(L, d)
    T = _time_scale(L)
    s = 0.5 * T if s is None else s
    if not 0 < s <= 0.5 * T * (1 + 1e-12):
        raise ValueError("s must lie in (0, T/2]")
    K = short_time_kernel(L, s)
    res = wasserstein_p(K[x], K[y], d, p)
    return (1.0 - res.cost / d[x, y] ** p) / (s * p), res.dual_gap


def k_cc_p(L, x: int, y: int, p: float = 1.0, d=None, s: float | None = None) -> float:
    _pair_check(x, y)
    return _k_cc_p(L, x, y, p, d, s)[0]


def _k_cc_inf(L, x, y, d):
    Q = _offdiag(L)
    d = _dist(L, d)
    dxy = d[x, y]
    out_x, out_y = Q[x].sum(), Q[y].sum()
    # padding both totals to out(x) + out(y) lets every jump pair with a stay;
    # larger totals only add mass at (x, y), which leaves the objective unchanged
    total = out_x + out_y
    mu = Q[x].copy()
    nu = Q[y].copy()
    mu[x] = total - out_x
    nu[y] = total - out_y
    out = _solve(mu, nu, d.astype(float), d <= dxy)
    if out is None:
        return -math.inf, 0.0
    return (total * dxy - out[0]) / dxy, out[2]


def k_cc_inf(L, x: int, y: int, d=None) -> float:
    """Best K with coupling rates C of the jumps from x and y, C supported on
    pairs no farther apart than d(x, y), and sum C (d(x,y) - d) >= K d(x,y)."""
    _pair_check(x, y)
    return _k_cc_inf(L, x, y, d)[0]


def idleness_profile(L, x: int, y: int, p: float = 1.0, n_points: int = 11, d=None) -> dict:
    """Samples of W_p^p(delta_x (I + tL), delta_y (I + tL)) for t in [0, T/2]."""
    _pair_check(x, y)
    d = _dist(L, d)
    T = _time_scale(L)
    ts = np.linspace(0.0, 0.5 * T, n_points)
    values = np.array([wasserstein_p(short_time_kernel(L, t)[x], short_time_kernel(L, t)[y], d, p).cost
                       for t in ts])
    slope, intercept = np.polyfit(ts, values, 1)
    dev = float(np.max(np.abs(values - (slope * ts + intercept))))
    return {"t": ts, "values": values, "slope": float(slope), "intercept": float(intercept),
            "max_dev_from_linear": dev}


def semigroup_kccp(L, x: int, y: int, p: float = 1.0, d=None, steps=None) -> float:
    """-(1/d) d/dt W_p(delta_x P_t, delta_y P_t) at t = 0 with P_t = exp(tL).

    Forward difference quotients of W_p^p at the steps T/8, T/16, T/32 and
    T/64, combined by polynomial extrapolation to h = 0 so the leading three
    error orders cancel.
    """
    _pair_check(x, y)
    d = _dist(L, d)
    G = _generator(L)
    T = _time_scale(L)
    steps = (T / 8, T / 16, T / 32, T / 64) if steps is None else steps
    dxy = d[x, y]
    quot = []
    for t in steps:
        Pt = expm(t * G)
        cost = wasserstein_p(Pt[x], Pt[y], d, p).cost
        quot.append((cost - dxy**p) / t)
    h = np.asarray(steps, dtype=float)
    # interpolate the quotients by a polynomial in h and keep its value at 0
    V = np.vander(h, len(h), increasing=True)
    a = np.linalg.solve(V, np.asarray(quot))[0]
    # d/dt W_p = (1/p) d^(1-p) d/dt W_p^p at t = 0
    return float(-a / (p * dxy**p))


def compare_dc_cc(P, lam: float, x: int, y: int, p: float = 1.0) -> dict:
    """Relations between discrete-time curvatures of P and continuous-time ones of lam (P - I)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    _pair_check(x, y)
    P = np.asarray(P, dtype=float)
    lazy = 0.5 * (np.eye(len(P)) + P)
    L = lam * (P - np.eye(len(P)))
    d = _dist(P, None)
    dc1_lazy = k_dc_p(lazy, x, y, 1, d)
    cc1 = k_cc_p(L, x, y, 1, d)
    cc_inf = k_cc_inf(L, x, y, d)
    dc_inf = k_dc_inf(P, x, y, d)
    dc_inf_lazy = k_dc_inf(lazy, x, y, d)
    tol = 1e-10
    return {
        "k_dc1_lazy": dc1_lazy,
        "k_cc1_over_2lam": cc1 / (2 * lam),
        "identity_ok": abs(dc1_lazy - cc1 / (2 * lam)) <= tol * max(1.0, abs(dc1_lazy)),
        "k_cc_inf": cc_inf,
        "lam_k_dc_inf": lam * dc_inf,
        "cc_inf_vs_dc_inf_ok": cc_inf >= lam * dc_inf - tol,
        "k_dc_inf_lazy": dc_inf_lazy,
        "lazy_dc_inf_vs_cc_inf_ok": dc_inf_lazy >= cc_inf / (2 * lam) - tol,
    }


# --------------------------------------------------------------------------
# reports over pairs


@dataclass
class CoarseReport:
    rows: list  # dicts with x, y, p, flavor, value, dual_gap, near_zero
    infima: dict = field(default_factory=dict)  # (flavor, p) -> inf over the evaluated pairs

    def to_csv(self) -> str:
        lines = ["x,y,p,flavor,value,dual_gap"]
        for r in self.rows:
            lines.append(f"{r['x']},{r['y']},{r['p']},{r['flavor']},{r['value']!r},{r['dual_gap']!r}")
        return "\n".join(lines) + "\n"


def neighbor_pairs(M) -> list:
    Q = _offdiag(M)
    adj = (Q > 0) | (Q.T > 0)
    return [(int(a), int(b)) for a, b in zip(*np.nonzero(adj)) if a < b]


def all_pairs(n: int) -> list:
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("CURVLAB_THREADS", "1")))
    except ValueError:
        return 1


def coarse_report(M, pairs="neighbors", ps=(1, 2, math.inf), flavor: str = "cc",
                  workers: int | None = None) -> CoarseReport:
    """Curvatures for each (x, y, p).  ``M`` is a generator (flavor "cc") or a
    stochastic matrix (flavor "dc"); a MappingChain is turned into its generator."""
    if isinstance(M, MappingChain):
        M = build_generator(M)
    M = np.asarray(M, dtype=float)
    d = _dist(M, None)
    if pairs == "neighbors":
        pairs = neighbor_pairs(M)
    elif pairs == "all":
        pairs = all_pairs(len(M))
    tasks = [(x, y, p) for x, y in pairs for p in ps]

    def one(task):
        x, y, p = task
        if flavor == "cc":
            value, gap = _k_cc_inf(M, x, y, d) if math.isinf(p) else _k_cc_p(M, x, y, p, d)
        elif flavor == "dc":
            value, gap = _k_dc_inf(M, x, y, d) if math.isinf(p) else _k_dc_p(M, x, y, p, d)
        else:
            raise ValueError(f"unknown flavor {flavor!r}")
        return {"x": x, "y": y, "p": "inf" if math.isinf(p) else p, "flavor": flavor,
                "value": value, "dual_gap": gap, "near_zero": abs(value) <= ZERO_FLAG}

    workers = workers or _workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, tasks))
    else:
        rows = [one(t) for t in tasks]
    infima = {}
    for r in rows:
        key = (r["flavor"], r["p"])
        infima[key] = min(infima.get(key, math.inf), r["value"])
    return CoarseReport(rows, infima)
