"""Interacting random walks on N^d, localized to the box {0..N}^d.

Rates are c(eta, +i) = exp(-(V+(eta+e_i) - V+(eta))) and
c(eta, -i) = exp(V-(eta) - V-(eta-e_i)) for eta_i > 0, reversible for
m proportional to exp(-V+ - V-) on the counting measure.  On the box the
up-move at eta_i = N is clipped to a self-loop, which carries rate 0 here.
"""

from __future__ import annotations

import math

import numpy as np

from ..chain import MAX_STATES, MappingChain, MoveSet
from ..couplings import CouplingRates
from .base import Assumption, ModelInstance

_TOL = 1e-12


def poisson_minus_potential(lam: float):
    """V-(eta) = sum log(lam) eta_i + log(eta_i!), giving c(eta, -i) = lam * eta_i."""
    log_lam = math.log(lam)
    return lambda eta: float(sum(log_lam * k + math.lgamma(k + 1) for k in eta))


def radial_potential(h, beta: float):
    return lambda eta: beta * h(int(sum(eta)))


def separable_quadratic(a):
    a = np.asarray(a, dtype=float)
    return lambda eta: float(np.dot(a, np.asarray(eta, dtype=float) ** 2))


def polynomial_potential(coeffs):
    """Separable polynomial V(eta) = sum_i sum_k coeffs[k] * eta_i**k."""
    coeffs = [float(c) for c in coeffs]
    return lambda eta: float(sum(c * k**p for k in eta for p, c in enumerate(coeffs)))


def _box(d: int, side: int) -> np.ndarray:
    """All points of {0..side}^d, last coordinate fastest."""
    return np.array(list(np.ndindex(*([side + 1] * d))), dtype=np.int64).reshape(-1, d)


class _Grid:
    """Unclipped rates and their up-gradients on a box large enough for the checks."""

    def __init__(self, d, side, V_plus, V_minus):
        self.d, self.side = d, side
        self.points = _box(d, side)
        self.shape = (side + 1,) * d
        vp = np.array([V_plus(tuple(p)) for p in self.points.tolist()], dtype=float)
        vm = np.array([V_minus(tuple(p)) for p in self.points.tolist()], dtype=float)
        P = len(self.points)
        self.up = np.full((P, d), -1, dtype=np.int64)
        self.down = np.full((P, d), -1, dtype=np.int64)
        for i in range(d):
            ok = self.points[:, i] < side
            q = self.points[ok].copy()
            q[:, i] += 1
            self.up[ok, i] = np.ravel_multi_index(q.T, self.shape)
            ok = self.points[:, i] > 0
            q = self.points[ok].copy()
            q[:, i] -= 1
            self.down[ok, i] = np.ravel_multi_index(q.T, self.shape)
        self.c_plus = np.full((P, d), np.nan)
        self.c_minus = np.zeros((P, d))
        for j in range(d):
            ok = self.up[:, j] >= 0
            self.c_plus[ok, j] = np.exp(-(vp[self.up[ok, j]] - vp[ok]))
            ok = self.down[:, j] >= 0
            self.c_minus[ok, j] = np.exp(vm[ok] - vm[self.down[ok, j]])
        self.vp, self.vm = vp, vm

    def index(self, pts):
        return np.ravel_multi_index(np.asarray(pts).T, self.shape)

    def gradients(self, pts):
        """grad_plus[k, i, j] = c(eta+e_i, +j) - c(eta, +j), same for minus moves."""
        idx = self.index(pts)
        up = self.up[idx]
        gp = self.c_plus[up][:, :, :] - self.c_plus[idx][:, None, :]
        gm = self.c_minus[up][:, :, :] - self.c_minus[idx][:, None, :]
        return gp, gm


def _kappas(grad_plus, grad_minus):
    d = grad_plus.shape[1]
    eye = np.eye(d, dtype=bool)[None]
    diag_p = np.diagonal(grad_plus, axis1=1, axis2=2)
    diag_m = np.diagonal(grad_minus, axis1=1, axis2=2)
    off_p = np.where(eye, 0.0, grad_plus)
    off_m = np.where(eye, 0.0, grad_minus)
    k_plus = -diag_p - np.maximum(off_p, 0).sum(axis=2) - np.maximum(off_m, 0).sum(axis=2)
    k_minus = diag_m - np.maximum(-off_p, 0).sum(axis=2) - np.maximum(-off_m, 0).sum(axis=2)
    return k_plus, k_minus


def _hypotheses(grid: _Grid, side: int):
    pts = _box(grid.d, side)
    gp, gm = grid.gradients(pts)
    k_plus, k_minus = _kappas(gp, gm)

    def worst(values, sign):
        # most violating entry for the predicate sign * value >= 0
        k = np.unravel_index(int(np.argmin(sign * values)), values.shape)
        return float(values[k]), (tuple(pts[k[0]].tolist()),) + tuple(int(x) for x in k[1:])

    out = {
        "kappa_plus": worst(k_plus, 1),
        "kappa_minus": worst(k_minus, 1),
        "grad_plus_up": worst(gp, -1),
        "grad_plus_down": worst(gm, 1),
    }
    kappa_star = float((k_plus + k_minus).min())
    kappa_bar = float(min(k_plus.min(), k_minus.min()))
    return out, kappa_star, kappa_bar


def interacting_rw_localized(d: int, N: int, V_plus, V_minus=None, lam: float = 1.0,
                             name: str = "irw", params=None) -> ModelInstance:
    """Interacting random walks on {0..N}^d.

    ``V_plus`` and ``V_minus`` take a tuple of d nonnegative integers.
    Without ``V_minus`` the down-rates are lam * eta_i.  The kappa constants
    come from the unclipped rates over the box {0..N}^d; their values over
    {0..N+1}^d are stored in ``report["box_N_plus_1"]``.  The coupling table
    uses the clipped rates of the localized chain.
    """
    if N < 2:
        raise ValueError("localization needs N >= 2")
    if d < 1:
        raise ValueError("need d >= 1")
    if (N + 1) ** d > MAX_STATES:
        raise ValueError("state space too large")
    if V_minus is None:
        if lam <= 0:
            raise ValueError("lam must be positive")
        V_minus = poisson_minus_potential(lam)
    grid = _Grid(d, N + 3, V_plus, V_minus)

    checks, kappa_star, kappa_bar = _hypotheses(grid, N)
    checks_next, kappa_star_next, kappa_bar_next = _hypotheses(grid, N + 1)
    labels = {
        "kappa_plus": "kappa+(eta,i) >= 0",
        "kappa_minus": "kappa-(eta,i) >= 0",
        "grad_plus_up": "grad_i c(eta,+j) <= 0",
        "grad_plus_down": "grad_i c(eta,-j) >= 0",
    }
    assumptions = []
    for key, label in labels.items():
        value, witness = checks[key]
        ok = value <= _TOL if key == "grad_plus_up" else value >= -_TOL
        assumptions.append(Assumption(label, ok, witness, value))

    # localized chain; moves 0 = e, 1..d = up, d+1..2d = down
    states = _box(d, N)
    n = len(states)
    idx = grid.index(states)
    shape = (N + 1,) * d
    maps = np.tile(np.arange(n), (2 * d + 1, 1))
    rates = np.zeros((n, 2 * d + 1))
    for i in range(d):
        ok = states[:, i] < N
        q = states[ok].copy()
        q[:, i] += 1
        maps[1 + i, ok] = np.ravel_multi_index(q.T, shape)
        rates[ok, 1 + i] = grid.c_plus[idx[ok], i]
        ok = states[:, i] > 0
        q = states[ok].copy()
        q[:, i] -= 1
        maps[1 + d + i, ok] = np.ravel_multi_index(q.T, shape)
        rates[ok, 1 + d + i] = grid.c_minus[idx[ok], i]
    inverse = [0] + [1 + d + i for i in range(d)] + [1 + i for i in range(d)]
    names = ["e"] + [f"+{i}" for i in range(d)] + [f"-{i}" for i in range(d)]
    moves = MoveSet(maps, 0, inverse, tuple(names))
    log_m = -(grid.vp[idx] + grid.vm[idx])
    chain = MappingChain(moves, rates, np.exp(log_m - log_m.max()),
                         tuple(tuple(s) for s in states.tolist()))

    # clipped gradients along up-edges, used by the coupling table
    cols = {k: [] for k in ("eta", "sigma", "gamma", "gammabar", "rate", "tag")}

    def put(eta, s, g, gb, r, tag):
        if r != 0:
            for k, v in zip(cols, (eta, s, g, gb, r, tag)):
                cols[k].append(v)

    G = 2 * d + 1
    for k in range(n):
        for i in range(d):
            if states[k, i] >= N:
                continue
            s = 1 + i
            xi = maps[s, k]
            grad = rates[xi] - rates[k]
            grad_p, grad_m = grad[None, None, 1:d + 1], grad[None, None, d + 1:]
            gp = np.zeros((1, d, d))
            gm = np.zeros((1, d, d))
            gp[0, i], gm[0, i] = grad_p, grad_m
            kp, km = _kappas(gp, gm)
            for g in range(1, G):
                put(k, s, g, g, min(rates[k, g], rates[xi, g]), "A")
            for g in range(1, G):
                if g in (s, 1 + d + i):
                    continue
                put(k, s, s, g, max(grad[g], 0.0), "B")
                put(k, s, g, 1 + d + i, max(-grad[g], 0.0), "C")
            put(k, s, s, 0, float(kp[0, i]), "D")
            put(k, s, 0, 1 + d + i, float(km[0, i]), "D")
    fwd = CouplingRates(**cols)
    rev = fwd.reversed(chain)
    coupling = CouplingRates(
        np.concatenate([fwd.eta, rev.eta]), np.concatenate([fwd.sigma, rev.sigma]),
        np.concatenate([fwd.gamma, rev.gamma]), np.concatenate([fwd.gammabar, rev.gammabar]),
        np.concatenate([fwd.rate, rev.rate]),
        np.concatenate([fwd.tag, np.full(len(rev), "reverse", dtype=object)]),
    )

    def theorem(M):
        return 0.5 * kappa_star + M * kappa_bar

    report = {
        "box_N_plus_1": {
            "kappa_star": kappa_star_next,
            "kappa_bar_star": kappa_bar_next,
            "hypotheses": {k: v[0] for k, v in checks_next.items()},
        },
        "clipped_upper_moves": "up-move at eta_i = N is a self-loop with rate 0",
    }
    return ModelInstance(name, chain, coupling, kappa_star, kappa_bar, assumptions,
                         dict(params or {}, d=d, N=N, lam=lam), theorem, ("A", "B", "C"),
                         None, report)


def radial_kappa_formula(h, beta: float, lam: float, d: int, N: int) -> dict:
    """kappa_* and the side condition for V = beta h(|eta|), |eta| ranging over the box."""
    m = np.arange(d * N + 1)
    step = np.array([h(k + 1) - h(k) for k in range(d * N + 2)], dtype=float)
    delta = np.exp(-beta * step[m]) - np.exp(-beta * step[m + 1])
    return {
        "kappa_star": float(np.min(lam - (d - 2) * delta)),
        "condition": float(np.min(lam - (d - 1) * delta)),
    }


def hessian_kappa_formula(V, lam: float, d: int, N: int) -> dict:
    """kappa_* for a potential with nonnegative discrete Hessian, infimum over the box."""
    grid = _Grid(d, N + 2, V, poisson_minus_potential(lam))
    pts = _box(d, N)
    idx = grid.index(pts)
    up = grid.up[idx]
    # e^{-grad_j V(eta)} - e^{-grad_j V(eta + e_i)} = c(eta,+j) - c(eta+e_i,+j)
    diff = grid.c_plus[idx][:, None, :] - grid.c_plus[up]
    eye = np.eye(d, dtype=bool)[None]
    own = np.diagonal(diff, axis1=1, axis2=2)
    others = np.where(eye, 0.0, diff).sum(axis=2)
    hess = np.array([[grid.vp[grid.up[grid.up[idx, i], j]] - grid.vp[grid.up[idx, i]]
                      - grid.vp[grid.up[idx, j]] + grid.vp[idx] for j in range(d)] for i in range(d)])
    return {
        "kappa_star": float(np.min(lam + own - others)),
        "condition": float(np.min(lam - others)),
        "hessian_min": float(hess.min()),
    }


PRESETS = {
    "radial-h2": lambda beta=1.0: radial_potential(lambda m: m * m, beta),
    "separable-quad": lambda a=1.0, d=1: separable_quadratic(np.broadcast_to(np.asarray(a, float), (d,))),
}
