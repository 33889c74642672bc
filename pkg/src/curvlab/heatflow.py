"""Heat semigroup P_t = exp(tL) acting on densities, with decay and contraction checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .chain import MappingChain, build_generator, graph_distance
from .coarse import wasserstein_p
from .functionals import phi_entropy
from .weights import EntropyGenerator, phi_alpha


@dataclass
class FlowTrace:
    times: np.ndarray
    densities: np.ndarray  # one row per time
    entropies: np.ndarray
    wasserstein: np.ndarray | None = None


def _kernels(chain: MappingChain, times) -> list:
    """exp(tL) for each t, reusing powers of one step on an arithmetic grid."""
    times = np.asarray(times, dtype=float)
    if times.size and times.min() < 0:
        raise ValueError("flow times must be nonnegative")
    G = build_generator(chain)
    steps = np.diff(times)
    if times.size > 2 and times[0] == 0 and steps[0] > 0 and np.allclose(steps, steps[0], rtol=1e-12, atol=0):
        step = expm(steps[0] * G)
        out = [np.eye(chain.n)]
        for _ in range(times.size - 1):
            out.append(out[-1] @ step)
        return out
    cache: dict = {}
    out = []
    for t in times.tolist():
        if t not in cache:
            cache[t] = expm(t * G)
        out.append(cache[t])
    return out


def evolve(chain: MappingChain, rho0, t: float) -> np.ndarray:
    """Density of mu_0 P_t with respect to m, where mu_0 = rho0 m."""
    return heat_flow(chain, rho0, [t]).densities[0]


def heat_flow(chain: MappingChain, rho0, times, gen: EntropyGenerator | None = None,
              p: float | None = None) -> FlowTrace:
    """Densities rho_t for each time; with ``p`` also W_p(rho_t m, m)."""
    rho0 = np.asarray(rho0, dtype=float)
    if rho0.min() < 0:
        raise ValueError("initial density must be nonnegative")
    times = np.asarray(times, dtype=float)
    m = chain.measure
    mu0 = rho0 * m
    dens = np.array([(mu0 @ K) / m for K in _kernels(chain, times)]).reshape(times.size, chain.n)
    dens = np.maximum(dens, 0.0)
    gen = gen or phi_alpha(1.0)
    ent = np.asarray(phi_entropy(dens, gen, chain)) if times.size else np.zeros(0)
    wass = None
    if p is not None:
        d = graph_distance(chain)
        wass = np.array([wasserstein_p(r * m, m, d, p).value for r in dens])
    return FlowTrace(times, dens, ent, wass)


def entropy_decay_check(chain: MappingChain, gen: EntropyGenerator, K: float, rho0, times,
                        rel_tol: float = 1e-8) -> dict:
    """H(rho_t) <= exp(-K t) H(rho_0) at every sampled time, up to a relative slack."""
    trace = heat_flow(chain, rho0, np.concatenate([[0.0], np.asarray(times, float)]), gen)
    h0 = trace.entropies[0]
    bound = np.exp(-K * trace.times) * h0
    abs_tol = 1e-14 * max(1.0, abs(h0))
    ok = np.all(trace.entropies <= bound * (1 + rel_tol) + abs_tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, trace.entropies / bound, 0.0)
    return {"ok": bool(ok), "worst_ratio": float(ratio[1:].max(initial=0.0)), "times": trace.times[1:].tolist()}


def wasserstein_contraction_check(chain: MappingChain, p: float, K: float, pairs="all", times=(0.1,),
                                  rel_tol: float = 1e-8) -> dict:
    """W_p(delta_x P_t, delta_y P_t) <= exp(-(K/p) t) d(x, y) over Dirac pairs."""
    d = graph_distance(chain)
    if pairs == "all":
        pairs = [(x, y) for x in range(chain.n) for y in range(x + 1, chain.n)]
    G = build_generator(chain)
    worst, arg = 0.0, None
    ok = True
    for t in times:
        Pt = expm(float(t) * G)
        for x, y in pairs:
            w = wasserstein_p(Pt[x], Pt[y], d, p).value
            bound = np.exp(-(K / p) * t) * d[x, y]
            if w > bound * (1 + rel_tol) + 1e-13:
                ok = False
            ratio = w / bound if bound > 0 else 0.0
            if ratio > worst:
                worst, arg = ratio, (x, y, float(t))
    return {"ok": ok, "worst_ratio": worst, "worst": arg}
