"""Glauber dynamics with commuting involutive moves: Curie-Weiss and Ising."""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..chain import MappingChain, MoveSet
from ..couplings import CouplingRates
from .base import Assumption, ModelInstance, spin_states

_TOL = 1e-12


def _check_moves(moves: MoveSet):
    ident = np.arange(moves.n_states)
    flips = [g for g in range(moves.n_moves) if g != moves.identity]
    bad_inv = [g for g in flips if not np.array_equal(moves.maps[g][moves.maps[g]], ident)]
    bad_comm = None
    for g, h in itertools.combinations(flips, 2):
        if not np.array_equal(moves.maps[g][moves.maps[h]], moves.maps[h][moves.maps[g]]):
            bad_comm = (g, h)
            break
    return bad_inv, bad_comm


def glauber_rates(moves: MoveSet, H, beta: float) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    rates = np.exp(-0.5 * beta * (H[moves.maps] - H[None, :])).T
    rates[:, moves.identity] = 0.0
    return rates


def kappa_table(moves: MoveSet, rates: np.ndarray) -> np.ndarray:
    """kappa(eta, s) = c(s eta, s) - sum_{g != s} max(-grad_s c(eta, g), 0)."""
    n, G = rates.shape
    kappa = np.zeros((n, G))
    for s in range(G):
        if s == moves.identity:
            continue
        grad = rates[moves.maps[s]] - rates
        grad[:, [s, moves.identity]] = 0.0
        kappa[:, s] = rates[moves.maps[s], s] - np.maximum(-grad, 0.0).sum(axis=1)
    return kappa


def glauber(moves: MoveSet, H, beta: float, name: str = "glauber", params=None) -> ModelInstance:
    """Glauber chain c(eta,s) = exp(-(beta/2)(H(s eta) - H(eta))) with Gibbs measure."""
    H = np.asarray(H, dtype=float)
    bad_inv, bad_comm = _check_moves(moves)
    rates = glauber_rates(moves, H, beta)
    gibbs = np.exp(-beta * (H - H.min()))
    chain = MappingChain(moves, rates, gibbs)
    ident = moves.identity
    flips = [g for g in range(moves.n_moves) if g != ident]
    kappa = kappa_table(moves, rates)

    pair = np.full((chain.n, moves.n_moves), np.inf)
    for s in flips:
        pair[:, s] = kappa[:, s] + kappa[moves.maps[s], s]
    k_flat = kappa[:, flips]
    kappa_bar = float(k_flat.min())
    kappa_star = float(pair[:, flips].min())
    w_bar = np.unravel_index(int(np.argmin(k_flat)), k_flat.shape)
    w_star = np.unravel_index(int(np.argmin(pair[:, flips])), k_flat.shape)

    assumptions = [
        Assumption("involutive moves", not bad_inv, bad_inv or None),
        Assumption("commuting moves", bad_comm is None, bad_comm),
        Assumption("kappa nonnegative", kappa_bar >= -_TOL,
                   (int(w_bar[0]), flips[w_bar[1]]), kappa_bar),
    ]

    # coupling table on every edge of the support
    cols = {k: [] for k in ("eta", "sigma", "gamma", "gammabar", "rate", "tag")}

    def put(eta, s, g, gb, r, tag):
        if r != 0:
            for k, v in zip(cols, (eta, s, g, gb, r, tag)):
                cols[k].append(v)

    e = chain.edges
    for eta, s in zip(e.src.tolist(), e.move.tolist()):
        other = moves.maps[s, eta]
        for g in flips:
            if g == s:
                continue
            put(eta, s, g, g, min(rates[other, g], rates[eta, g]), "A")
            grad = rates[other, g] - rates[eta, g]
            if grad < 0:
                put(eta, s, g, s, -grad, "B")
            elif grad > 0:
                put(eta, s, s, g, grad, "C")
        put(eta, s, s, ident, kappa[other, s], "D")
        put(eta, s, ident, s, kappa[eta, s], "D")
    coupling = CouplingRates(**cols)

    def theorem(M):
        return M * kappa_bar + 0.5 * kappa_star

    return ModelInstance(
        name, chain, coupling, kappa_star, kappa_bar, assumptions,
        dict(params or {}, beta=beta), theorem, ("A", "B", "C"), kappa_star,
        {"kappa_star_witness": (int(w_star[0]), flips[w_star[1]]),
         "kappa_bar_witness": (int(w_bar[0]), flips[w_bar[1]])},
    )


def _flip_moves(n_sites: int) -> MoveSet:
    n = 2**n_sites
    maps = [np.arange(n)] + [np.arange(n) ^ (1 << i) for i in range(n_sites)]
    names = ["e"] + [f"flip{i}" for i in range(n_sites)]
    return MoveSet(np.array(maps), 0, np.arange(n_sites + 1), tuple(names))


def f_cw(m: int, N: int, beta: float) -> float:
    q = math.exp(2 * beta / N) - 1.0
    a = beta / N * (N - 1 - 2 * m)
    return math.exp(-a) * (1 - (N - 1 - m) * q) + math.exp(a) * (1 - m * q)


def curie_weiss_constants(N: int, beta: float) -> dict:
    q = math.exp(2 * beta / N) - 1.0
    kappa_star = f_cw((N - 1) // 2, N, beta)
    # the sign inside the bracket is the one forced by the definition of kappa
    kappa_bar = math.exp(-beta / N * (N - 1)) * (1 - (N - 1) * q)
    kappa_bar_printed = math.exp(-beta / N * (N - 1)) * (1 - (N - 1) * (1 - math.exp(2 * beta / N)))
    return {
        "condition_value": (N - 1) * q,
        "kappa_star": kappa_star,
        "kappa_bar_star": kappa_bar,
        "kappa_bar_star_as_printed": kappa_bar_printed,
        "K_log": 0.5 * kappa_star + kappa_bar,
        "K_log_limit": (1 - beta) + (1 - 2 * beta) * math.exp(-beta),
    }


def curie_weiss(N: int, beta: float) -> ModelInstance:
    """Mean-field spins; state k encodes site i as +1 iff bit i of k is set."""
    if N < 2:
        raise ValueError("Curie-Weiss needs N >= 2")
    eta = spin_states(N)
    H = -(eta.sum(axis=1) ** 2) / (2.0 * N)
    inst = glauber(_flip_moves(N), H, beta, "curie-weiss", {"N": N})
    formula = curie_weiss_constants(N, beta)
    inst.assumptions.append(Assumption("(N-1)(exp(2b/N)-1) <= 1", formula["condition_value"] <= 1.0,
                                       None, formula["condition_value"]))
    inst.report["formula"] = formula
    return inst


def _grid_sites(shape):
    sites = list(itertools.product(*[range(k) for k in shape]))
    index = {s: i for i, s in enumerate(sites)}
    edges = []
    for s in sites:
        for axis in range(len(shape)):
            t = list(s)
            t[axis] += 1
            if tuple(t) in index:
                edges.append((index[s], index[tuple(t)]))
    return sites, edges


def ising_constants(d: int, beta: float) -> dict:
    a = 1 - math.exp(-2 * beta)
    kappa_star = 2 - 2 * d * a * math.exp(2 * beta * d)
    kappa_bar = math.exp(-2 * beta * d) - 2 * d * a * math.exp(2 * beta * d)
    return {
        "condition_value": 2 * d * a * math.exp(4 * d * beta),
        "kappa_star": kappa_star,
        "kappa_bar_star": kappa_bar,
        "K_log": 1 + math.exp(-2 * beta * d) - 3 * d * a * math.exp(2 * beta * d),
    }


def ising(shape, beta: float) -> ModelInstance:
    """Nearest-neighbour Ising model on a box of Z^d (sites in row-major order)."""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    d = len(shape)
    sites, edges = _grid_sites(shape)
    eta = spin_states(len(sites))
    H = np.zeros(eta.shape[0])
    for x, y in edges:
        H -= eta[:, x] * eta[:, y]
    inst = glauber(_flip_moves(len(sites)), H, beta, "ising", {"shape": list(shape)})
    formula = ising_constants(d, beta)
    inst.assumptions.append(Assumption("2d(1-exp(-2b))exp(4db) <= 1", formula["condition_value"] <= 1.0,
                                       None, formula["condition_value"]))
    inst.report["formula"] = formula
    return inst
