"""Bernoulli-Laplace model and the hardcore model on a graph."""

from __future__ import annotations


import numpy as np

from ..chain import MAX_STATES, MappingChain, MoveSet
from ..couplings import CouplingRates
from .base import Assumption, ModelInstance


class _Table:
    def __init__(self):
        self.cols = {k: [] for k in ("eta", "sigma", "gamma", "gammabar", "rate", "tag")}

    def put(self, eta, s, g, gb, r, tag):
        if r != 0:
            for k, v in zip(self.cols, (eta, s, g, gb, r, tag)):
                self.cols[k].append(v)

    def build(self) -> CouplingRates:
        return CouplingRates(**self.cols)


def bernoulli_laplace(L: int, N: int) -> ModelInstance:
    """N particles on L sites, each particle jumping to each empty site at rate 1.

    States are the L-bit patterns with N ones in increasing numeric order
    (bit i set means site i occupied).  Move ``(i, j)`` carries a particle
    from i to j when possible and is the identity otherwise.
    """
    if not 0 < N < L:
        raise ValueError("need 0 < N < L")
    codes = [c for c in range(2**L) if bin(c).count("1") == N]
    if len(codes) > MAX_STATES:
        raise ValueError("state space too large")
    index = {c: k for k, c in enumerate(codes)}
    occ = np.array([[(c >> i) & 1 for i in range(L)] for c in codes])
    pairs = [(i, j) for i in range(L) for j in range(L) if i != j]
    move_of = {p: k + 1 for k, p in enumerate(pairs)}
    n = len(codes)
    maps = [np.arange(n)]
    rates = np.zeros((n, len(pairs) + 1))
    for k, (i, j) in enumerate(pairs, start=1):
        mp = np.arange(n)
        for s, c in enumerate(codes):
            if occ[s, i] and not occ[s, j]:
                mp[s] = index[c ^ (1 << i) ^ (1 << j)]
                rates[s, k] = 1.0
        maps.append(mp)
    inverse = [0] + [move_of[(j, i)] for (i, j) in pairs]
    names = ["e"] + [f"{i}->{j}" for i, j in pairs]
    moves = MoveSet(np.array(maps), 0, inverse, tuple(names))
    chain = MappingChain(moves, rates, np.ones(n))

    tab = _Table()
    e = chain.edges
    for eta, s in zip(e.src.tolist(), e.move.tolist()):
        i, j = pairs[s - 1]
        other = moves.maps[s, eta]
        for g in range(1, len(pairs) + 1):
            tab.put(eta, s, g, g, min(rates[eta, g], rates[other, g]), "A")
        tab.put(eta, s, s, 0, 1.0, "B")
        tab.put(eta, s, 0, move_of[(j, i)], 1.0, "B")
        for l in range(L):
            if l in (i, j):
                continue
            tab.put(eta, s, move_of[(i, l)], move_of[(j, l)], 1.0 - occ[eta, l], "C")
            tab.put(eta, s, move_of[(l, j)], move_of[(l, i)], float(occ[eta, l]), "D")

    def theorem(M):
        return M + 0.5 * L

    return ModelInstance("bernoulli-laplace", chain, tab.build(), None, None, [],
                         {"L": L, "N": N}, theorem, ("A",), float(L))


def _adjacency(graph, n_vertices=None):
    """Neighbour sets from an edge list, a dict of lists or a 0/1 matrix."""
    if isinstance(graph, dict):
        nbrs = {int(k): set(map(int, v)) for k, v in graph.items()}
        n = max(list(nbrs) + [x for v in nbrs.values() for x in v]) + 1
    else:
        arr = np.asarray(graph)
        if arr.ndim == 2 and arr.shape[0] == arr.shape[1] and arr.shape[1] != 2:
            n = arr.shape[0]
            nbrs = {x: set(np.flatnonzero(arr[x]).tolist()) - {x} for x in range(n)}
        else:
            edges = [tuple(map(int, e)) for e in graph]
            n = max([max(e) for e in edges] + [-1]) + 1
            nbrs = {x: set() for x in range(n)}
            for x, y in edges:
                if x == y:
                    raise ValueError("self-loops are not allowed")
                nbrs[x].add(y)
                nbrs[y].add(x)
    n = max(n, n_vertices or 0)
    out = [set() for _ in range(n)]
    for x, ys in nbrs.items():
        for y in ys:
            out[x].add(y)
            out[y].add(x)
    return out


def _connected(nbrs) -> bool:
    seen, stack = {0}, [0]
    while stack:
        x = stack.pop()
        for y in nbrs[x] - seen:
            seen.add(y)
            stack.append(y)
    return len(seen) == len(nbrs)


def independent_sets(nbrs) -> list:
    """All independent sets as sorted tuples, in lexicographic order."""
    out = []

    def extend(current, start, blocked):
        out.append(tuple(current))
        if len(out) > MAX_STATES:
            raise ValueError("state space too large")
        for v in range(start, len(nbrs)):
            if v not in blocked:
                current.append(v)
                extend(current, v + 1, blocked | nbrs[v] | {v})
                current.pop()

    extend([], 0, frozenset())
    return out


def hardcore(graph, beta: float, n_vertices: int | None = None) -> ModelInstance:
    """Hardcore gas: particles appear at rate beta on free sites and leave at rate 1."""
    if not 0 < beta:
        raise ValueError("beta must be positive")
    nbrs = _adjacency(graph, n_vertices)
    V = len(nbrs)
    if V == 0 or not _connected(nbrs):
        raise ValueError("hardcore model needs a connected nonempty graph")
    sets = independent_sets(nbrs)
    index = {s: k for k, s in enumerate(sets)}
    n = len(sets)
    occ = np.zeros((n, V), dtype=int)
    for k, s in enumerate(sets):
        occ[k, list(s)] = 1
    closed = [nbrs[x] | {x} for x in range(V)]
    free = np.array([[not occ[k, list(closed[x])].any() for x in range(V)] for k in range(n)])

    # moves: 0 = e, 1..V = add x, V+1..2V = remove x
    plus = lambda x: 1 + x
    minus = lambda x: 1 + V + x
    maps = np.tile(np.arange(n), (2 * V + 1, 1))
    rates = np.zeros((n, 2 * V + 1))
    for k, s in enumerate(sets):
        for x in range(V):
            if free[k, x]:
                maps[plus(x), k] = index[tuple(sorted(s + (x,)))]
                rates[k, plus(x)] = beta
            if occ[k, x]:
                maps[minus(x), k] = index[tuple(v for v in s if v != x)]
                rates[k, minus(x)] = 1.0
    inverse = [0] + [minus(x) for x in range(V)] + [plus(x) for x in range(V)]
    names = ["e"] + [f"+{x}" for x in range(V)] + [f"-{x}" for x in range(V)]
    moves = MoveSet(maps, 0, inverse, tuple(names))
    chain = MappingChain(moves, rates, beta ** occ.sum(axis=1).astype(float))

    delta = max(len(v) for v in nbrs)
    kappa_star = 1 - beta * (delta - 1)
    kappa_bar = min(beta, 1 - beta * delta)
    assumptions = [Assumption("beta * max_degree <= 1", beta * delta <= 1.0, None, beta * delta)]

    tab = _Table()
    for k in range(n):
        for x in range(V):
            if not free[k, x]:
                continue
            s = plus(x)
            other = maps[s, k]
            for g in range(1, 2 * V + 1):
                tab.put(k, s, g, g, min(rates[k, g], rates[other, g]), "A")
            count = 0
            for y in nbrs[x]:
                if free[k, y]:
                    count += 1
                    tab.put(k, s, plus(y), minus(x), beta, "B")
            tab.put(k, s, s, 0, beta, "C")
            tab.put(k, s, 0, minus(x), 1 - beta * count, "C")
    fwd = tab.build()
    rev = fwd.reversed(chain)
    coupling = CouplingRates(
        np.concatenate([fwd.eta, rev.eta]), np.concatenate([fwd.sigma, rev.sigma]),
        np.concatenate([fwd.gamma, rev.gamma]), np.concatenate([fwd.gammabar, rev.gammabar]),
        np.concatenate([fwd.rate, rev.rate]),
        np.concatenate([fwd.tag, np.full(len(rev), "reverse", dtype=object)]),
    )

    def theorem(M):
        return 0.5 * kappa_star + M * kappa_bar

    return ModelInstance("hardcore", chain, coupling, kappa_star, kappa_bar, assumptions,
                         {"beta": beta, "n_vertices": V, "max_degree": delta}, theorem,
                         ("A", "B"), kappa_star)
