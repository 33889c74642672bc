"""Finite reversible Markov chains in mapping representation.

A chain is described by a list of moves (total maps on the states
``0..n-1``), a rate table ``rates[state, move]`` and a stationary
probability vector.  The generator acts as

    (L psi)(eta) = sum_move rates[eta, move] * (psi[move(eta)] - psi[eta]).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components, shortest_path

MAX_STATES = 2**20


class ChainError(ValueError):
    """Raised when a chain description violates a structural invariant."""


@dataclass(frozen=True)
class MoveSet:
    """Moves as an integer table ``maps[move, state] -> state``."""

    maps: np.ndarray
    identity: int
    inverse: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.int64)
        inverse = np.asarray(self.inverse, dtype=np.int64)
        if maps.ndim != 2:
            raise ChainError("move table must be two-dimensional (moves x states)")
        n_moves, n = maps.shape
        if n > MAX_STATES:
            raise ChainError(f"state count {n} exceeds the cap {MAX_STATES}")
        if inverse.shape != (n_moves,):
            raise ChainError("one inverse index is needed per move")
        if maps.size and (maps.min() < 0 or maps.max() >= n):
            raise ChainError("a move maps outside the state set")
        if not 0 <= self.identity < n_moves:
            raise ChainError("identity index out of range")
        if not np.array_equal(maps[self.identity], np.arange(n)):
            raise ChainError("the identity move must fix every state")
        if inverse.min() < 0 or inverse.max() >= n_moves:
            raise ChainError("inverse index out of range")
        if not np.array_equal(inverse[inverse], np.arange(n_moves)):
            raise ChainError("inverse must be an involution on move indices")
        names = tuple(self.names) or tuple(f"g{k}" for k in range(n_moves))
        if len(names) != n_moves:
            raise ChainError("one name is needed per move")
        maps.setflags(write=False)
        inverse.setflags(write=False)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "inverse", inverse)
        object.__setattr__(self, "names", names)

    @property
    def n_moves(self) -> int:
        return self.maps.shape[0]

    @property
    def n_states(self) -> int:
        return self.maps.shape[1]


@dataclass(frozen=True)
class Edges:
    """Flattened support: one entry per (state, move) with positive rate and a real jump."""

    src: np.ndarray
    move: np.ndarray
    dst: np.ndarray
    rate: np.ndarray
    weight: np.ndarray  # m(src) * rate


@dataclass(frozen=True)
class MappingChain:
    move_set: MoveSet
    rates: np.ndarray
    measure: np.ndarray
    state_labels: tuple = field(default=(), compare=False)

    def __post_init__(self):
        ms = self.move_set
        n = ms.n_states
        rates = np.array(self.rates, dtype=float)
        measure = np.array(self.measure, dtype=float)
        if rates.shape != (n, ms.n_moves):
            raise ChainError(f"rates must have shape {(n, ms.n_moves)}, got {rates.shape}")
        if not np.all(np.isfinite(rates)) or rates.min(initial=0.0) < 0:
            raise ChainError("rates must be finite and nonnegative")
        if measure.shape != (n,) or not np.all(np.isfinite(measure)) or measure.min() <= 0:
            raise ChainError("measure must be a positive vector with one entry per state")
        measure = measure / measure.sum()
        # inverses are only constrained on the support
        eta, move = np.nonzero(rates)
        back = ms.maps[ms.inverse[move], ms.maps[move, eta]]
        bad = np.flatnonzero(back != eta)
        if bad.size:
            k = bad[0]
            raise ChainError(
                f"inverse condition fails at state {eta[k]}, move {ms.names[move[k]]}"
            )
        rates.setflags(write=False)
        measure.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "measure", measure)

    @property
    def n(self) -> int:
        return self.move_set.n_states

    @property
    def maps(self) -> np.ndarray:
        return self.move_set.maps

    @property
    def identity(self) -> int:
        return self.move_set.identity

    @cached_property
    def edges(self) -> Edges:
        rates = self.rates.copy()
        rates[:, self.identity] = 0.0
        src, move = np.nonzero(rates)
        dst = self.maps[move, src]
        keep = dst != src
        src, move, dst = src[keep], move[keep], dst[keep]
        rate = rates[src, move]
        return Edges(src, move, dst, rate, self.measure[src] * rate)

    @cached_property
    def generator_sparse(self) -> sparse.csr_matrix:
        e = self.edges
        off = sparse.coo_matrix((e.rate, (e.src, e.dst)), shape=(self.n, self.n)).tocsr()
        out = np.asarray(off.sum(axis=1)).ravel()
        return (off - sparse.diags(out)).tocsr()

    def apply_generator(self, psi: np.ndarray) -> np.ndarray:
        """L applied along the last axis of ``psi`` (batched)."""
        psi = np.asarray(psi, dtype=float)
        if psi.ndim == 1:
            return self.generator_sparse @ psi
        return (self.generator_sparse @ psi.reshape(-1, self.n).T).T.reshape(psi.shape)

    @cached_property
    def _src_incidence(self) -> sparse.csr_matrix:
        e = self.edges
        ones = np.ones(e.src.size)
        return sparse.csr_matrix((ones, (e.src, np.arange(e.src.size))), shape=(self.n, e.src.size))

    def sum_over_moves(self, values: np.ndarray) -> np.ndarray:
        """Collect per-edge values (last axis) onto their source states."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            return self._src_incidence @ values
        flat = values.reshape(-1, values.shape[-1])
        return (self._src_incidence @ flat.T).T.reshape(values.shape[:-1] + (self.n,))

    def total_rates(self) -> np.ndarray:
        """Total jump rate out of each state, identity excluded."""
        r = self.rates.sum(axis=1) - self.rates[:, self.identity]
        return r

    # ------------------------------------------------------------------ io
    def to_dict(self) -> dict:
        ms = self.move_set
        return {
            "n": self.n,
            "moves": [
                {"map": ms.maps[g].tolist(), "inverse": int(ms.inverse[g]), "name": ms.names[g]}
                for g in range(ms.n_moves)
            ],
            "identity": int(ms.identity),
            "rates": self.rates.tolist(),
            "measure": self.measure.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MappingChain":
        try:
            n = int(data["n"])
            moves = data["moves"]
            maps = np.array([mv["map"] for mv in moves], dtype=np.int64).reshape(len(moves), -1)
            inverse = [int(mv["inverse"]) for mv in moves]
            names = tuple(mv.get("name", f"g{k}") for k, mv in enumerate(moves))
            identity = int(data["identity"])
            rates = np.array(data["rates"], dtype=float)
            measure = np.array(data["measure"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ChainError(f"malformed chain description: {exc}") from exc
        if maps.shape[1] != n:
            raise ChainError("move maps must have length n")
        return cls(MoveSet(maps, identity, inverse, names), rates, measure)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "MappingChain":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ChainError(f"malformed chain JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_rate_matrix(cls, Q, measure=None) -> "MappingChain":
        """Mapping representation of a rate matrix using transpositions.

        Each unordered pair {x, y} with a positive rate becomes a move that
        swaps x and y and fixes everything else, so every move is its own
        inverse.  Diagonal entries of ``Q`` are ignored.
        """
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        if measure is None:
            measure = stationary_distribution(Q)
        pairs = [(x, y) for x in range(n) for y in range(x + 1, n) if Q[x, y] > 0 or Q[y, x] > 0]
        maps = [np.arange(n)]
        names = ["e"]
        rates = np.zeros((n, len(pairs) + 1))
        for k, (x, y) in enumerate(pairs, start=1):
            mp = np.arange(n)
            mp[x], mp[y] = y, x
            maps.append(mp)
            names.append(f"swap{x}-{y}")
            rates[x, k] = Q[x, y]
            rates[y, k] = Q[y, x]
        moves = MoveSet(np.array(maps), 0, np.arange(len(maps)), tuple(names))
        return cls(moves, rates, measure)


def stationary_distribution(Q) -> np.ndarray:
    """Stationary vector of a rate matrix (diagonal recomputed from rows)."""
    Q = np.array(Q, dtype=float)
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    n = Q.shape[0]
    lhs = np.vstack([Q.T, np.ones(n)])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


def build_generator(chain: MappingChain) -> np.ndarray:
    """Dense generator matrix; rows sum to zero."""
    return chain.generator_sparse.toarray()


@dataclass
class ReversibilityReport:
    ok: bool
    max_violation: float
    worst: tuple | None  # (state, move index) of the worst pair


def check_reversibility(chain: MappingChain, tol: float = 1e-10) -> ReversibilityReport:
    """Pointwise detailed balance m(eta) c(eta, s) = m(s eta) c(s eta, s^-1) on the support.

    The violation of a pair is half the absolute difference of the two
    fluxes, i.e. the distance of each flux to their common average.
    """
    e = chain.edges
    inv = chain.move_set.inverse[e.move]
    back = chain.measure[e.dst] * chain.rates[e.dst, inv]
    viol = 0.5 * np.abs(e.weight - back)
    if viol.size == 0:
        return ReversibilityReport(True, 0.0, None)
    k = int(np.argmax(viol))
    worst = float(viol[k])
    return ReversibilityReport(worst <= tol, worst, (int(e.src[k]), int(e.move[k])))


def adjacency(chain: MappingChain) -> sparse.csr_matrix:
    e = chain.edges
    a = sparse.coo_matrix((np.ones(e.src.size), (e.src, e.dst)), shape=(chain.n, chain.n))
    return a.tocsr()


def graph_distance(chain: MappingChain) -> np.ndarray:
    """Shortest-path distances of the (undirected) move graph."""
    a = adjacency(chain)
    n_comp, _ = connected_components(a, directed=False)
    if n_comp != 1:
        raise ChainError("not irreducible: the move graph has several components")
    d = shortest_path(a, directed=False, unweighted=True)
    return d.astype(np.int64)


def distance_from_generator(L) -> np.ndarray:
    """Graph distance of the support of an off-diagonal rate matrix."""
    L = np.asarray(L, dtype=float)
    off = (L > 0) | (L.T > 0)
    np.fill_diagonal(off, False)
    a = sparse.csr_matrix(off.astype(float))
    n_comp, _ = connected_components(a, directed=False)
    if n_comp != 1:
        raise ChainError("not irreducible: the transition graph has several components")
    return shortest_path(a, directed=False, unweighted=True).astype(np.int64)


def discrete_gradient(chain: MappingChain, psi, move: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    return psi[..., chain.maps[move]] - psi
