"""Coupling rates between neighbouring states and the bound they give on B.

For an edge (eta, s) a coupling assigns a rate to every pair of moves
(g, gbar), g acting on eta and gbar acting on s(eta), with marginals equal to
the single-chain rates.  Entries are stored flat so that the J/I sums can be
evaluated for a whole batch of (rho, psi) samples at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .chain import MappingChain
from .functionals import as_density
from .weights import WeightFunction


@dataclass(frozen=True)
class CouplingRates:
    """Flat table of coupling entries.

    Row ``k`` says: on edge ``(eta[k], sigma[k])`` the pair of moves
    ``(gamma[k], gammabar[k])`` fires jointly with ``rate[k]``.  ``tag`` is a
    free label used by model constructors to group the entries of a table.
    """

    eta: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    gammabar: np.ndarray
    rate: np.ndarray
    tag: np.ndarray = field(default=None)

    def __post_init__(self):
        cols = [np.asarray(getattr(self, k), dtype=np.int64) for k in ("eta", "sigma", "gamma", "gammabar")]
        rate = np.asarray(self.rate, dtype=float)
        tag = np.asarray(self.tag if self.tag is not None else [""] * rate.size, dtype=object)
        if not all(c.shape == rate.shape for c in cols) or tag.shape != rate.shape:
            raise ValueError("coupling columns must have equal length")
        for k, c in zip(("eta", "sigma", "gamma", "gammabar"), cols):
            object.__setattr__(self, k, c)
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "tag", tag)

    def __len__(self):
        return self.rate.size

    @classmethod
    def from_mapping(cls, table: dict, tags: dict | None = None) -> "CouplingRates":
        """Build from ``{(eta, sigma): {(gamma, gammabar): rate}}``."""
        rows = []
        for (eta, sigma), entries in table.items():
            for (g, gb), r in entries.items():
                t = "" if tags is None else tags.get((eta, sigma, g, gb), "")
                rows.append((eta, sigma, g, gb, r, t))
        if not rows:
            return cls(*([np.zeros(0, dtype=np.int64)] * 4), np.zeros(0), np.zeros(0, dtype=object))
        eta, sigma, g, gb, r, t = zip(*rows)
        return cls(eta, sigma, g, gb, r, t)

    def edge(self, eta: int, sigma: int) -> dict:
        sel = (self.eta == eta) & (self.sigma == sigma)
        out: dict = {}
        for g, gb, r in zip(self.gamma[sel], self.gammabar[sel], self.rate[sel]):
            out[(int(g), int(gb))] = out.get((int(g), int(gb)), 0.0) + float(r)
        return out

    def select(self, mask) -> "CouplingRates":
        mask = np.asarray(mask, dtype=bool)
        return CouplingRates(self.eta[mask], self.sigma[mask], self.gamma[mask],
                             self.gammabar[mask], self.rate[mask], self.tag[mask])

    def with_rate(self, rate) -> "CouplingRates":
        return CouplingRates(self.eta, self.sigma, self.gamma, self.gammabar, rate, self.tag)

    def reversed(self, chain: MappingChain) -> "CouplingRates":
        """Coupling of each edge (eta, s) read off the reverse edge (s eta, s^-1)."""
        dst = chain.maps[self.sigma, self.eta]
        inv = chain.move_set.inverse[self.sigma]
        return CouplingRates(dst, inv, self.gammabar, self.gamma, self.rate, self.tag)

    def to_json(self) -> str:
        out = []
        keys = sorted(set(zip(self.eta.tolist(), self.sigma.tolist())))
        for eta, sigma in keys:
            entries = [{"gamma": g, "gammabar": gb, "rate": r} for (g, gb), r in self.edge(eta, sigma).items()]
            out.append({"eta": eta, "sigma": sigma, "entries": entries})
        return json.dumps(out)

    @classmethod
    def from_json(cls, text: str) -> "CouplingRates":
        table = {}
        for item in json.loads(text):
            table[(int(item["eta"]), int(item["sigma"]))] = {
                (int(e["gamma"]), int(e["gammabar"])): float(e["rate"]) for e in item["entries"]
            }
        return cls.from_mapping(table)


@dataclass
class CouplingReport:
    ok: bool
    worst_edge: tuple | None
    worst_violation: float
    e_adjustments: list
    negative_entries: int = 0


def validate_coupling_rates(rates: CouplingRates, chain: MappingChain, tol: float = 1e-10) -> CouplingReport:
    """Check both marginal systems on every edge of the support.

    Marginals on the identity move are not constrained: the identity rate
    never enters the generator, so the identity row and column sums define
    the adjusted values of c(eta, e) and c(s eta, e).  Each such adjustment
    is listed as ``(eta, sigma, new c(eta,e), new c(s eta,e))``.
    """
    e = chain.edges
    ident = chain.identity
    n_moves = chain.move_set.n_moves
    neg = int(np.sum(rates.rate < 0))
    edge_index = {(int(a), int(b)): k for k, (a, b) in enumerate(zip(e.src, e.move))}
    rows = np.zeros((e.src.size, n_moves))
    cols = np.zeros((e.src.size, n_moves))
    k = np.array([edge_index.get((int(a), int(b)), -1) for a, b in zip(rates.eta, rates.sigma)], dtype=np.int64)
    stray = k < 0
    np.add.at(rows, (k[~stray], rates.gamma[~stray]), rates.rate[~stray])
    np.add.at(cols, (k[~stray], rates.gammabar[~stray]), rates.rate[~stray])
    want_rows = chain.rates[e.src].copy()
    want_cols = chain.rates[e.dst].copy()
    adjustments = [
        (int(e.src[j]), int(e.move[j]), float(rows[j, ident]), float(cols[j, ident]))
        for j in range(e.src.size)
        if rows[j, ident] != want_rows[j, ident] or cols[j, ident] != want_cols[j, ident]
    ]
    want_rows[:, ident] = rows[:, ident]
    want_cols[:, ident] = cols[:, ident]
    viol = np.maximum(np.abs(rows - want_rows).max(axis=1, initial=0.0),
                      np.abs(cols - want_cols).max(axis=1, initial=0.0))
    worst_edge, worst = None, 0.0
    if viol.size:
        j = int(np.argmax(viol))
        worst, worst_edge = float(viol[j]), (int(e.src[j]), int(e.move[j]))
    if np.any(stray) and np.any(rates.rate[stray] != 0):
        j = int(np.flatnonzero(stray)[0])
        worst_edge, worst = (int(rates.eta[j]), int(rates.sigma[j])), max(worst, abs(float(rates.rate[j])))
    ok = worst <= tol and neg == 0
    return CouplingReport(ok, worst_edge, worst, adjustments, neg)


def product_coupling_rates(chain: MappingChain, eta: int, sigma: int) -> dict:
    """Independent coupling c(eta,g) c(s eta,gbar) / Z after padding both totals to Z."""
    ident = chain.identity
    other = chain.maps[sigma, eta]
    r0 = chain.rates[eta].copy()
    r1 = chain.rates[other].copy()
    r0[ident] = r1[ident] = 0.0
    z = max(r0.sum(), r1.sum())
    if z <= 0:
        raise ValueError("product coupling needs a positive total rate")
    r0[ident] = z - r0.sum()
    r1[ident] = z - r1.sum()
    out = {}
    for g in np.flatnonzero(r0):
        for gb in np.flatnonzero(r1):
            out[(int(g), int(gb))] = float(r0[g] * r1[gb] / z)
    return out


def product_coupling(chain: MappingChain) -> CouplingRates:
    e = chain.edges
    table = {(int(a), int(b)): product_coupling_rates(chain, int(a), int(b)) for a, b in zip(e.src, e.move)}
    return CouplingRates.from_mapping(table)


# --------------------------------------------------------------------------
# J and I


def _states(chain, eta, sigma, gamma, gammabar):
    s_eta = chain.maps[sigma, eta]
    return eta, s_eta, chain.maps[gamma, eta], chain.maps[gammabar, s_eta]


def _j_i(rho, psi, theta, a, b, c, d):
    th_ab = theta(rho[..., a], rho[..., b])
    th_cd = theta(rho[..., c], rho[..., d])
    diff = psi[..., a] - psi[..., b]
    diff2 = psi[..., c] - psi[..., d]
    J = (th_cd + th_ab) * diff**2 - 2.0 * th_ab * diff * diff2
    I = th_cd * diff**2 - th_ab * diff2**2
    return J, I


def J_term(eta, sigma, gamma, gammabar, rho, psi, theta: WeightFunction, chain: MappingChain):
    rho, psi = as_density(rho), np.asarray(psi, dtype=float)
    return _j_i(rho, psi, theta, *_states(chain, eta, sigma, gamma, gammabar))[0]


def I_term(eta, sigma, gamma, gammabar, rho, psi, theta: WeightFunction, chain: MappingChain):
    rho, psi = as_density(rho), np.asarray(psi, dtype=float)
    return _j_i(rho, psi, theta, *_states(chain, eta, sigma, gamma, gammabar))[1]


def _weights(rates: CouplingRates, chain: MappingChain):
    return chain.measure[rates.eta] * chain.rates[rates.eta, rates.sigma] * rates.rate


def coupling_lower_bound(rho, psi, theta: WeightFunction, rates: CouplingRates, chain: MappingChain):
    """(1/4) sum m(eta) c(eta,s) c_cpl J over all coupling entries (batched)."""
    rho, psi = as_density(rho), np.asarray(psi, dtype=float)
    J, _ = _j_i(rho, psi, theta, *_states(chain, rates.eta, rates.sigma, rates.gamma, rates.gammabar))
    return 0.25 * np.sum(_weights(rates, chain) * J, axis=-1)


def symmetrized_lower_bound(rho, psi, theta, rates: CouplingRates, chain: MappingChain):
    """Larger of the bounds from the stored couplings and from the reversed ones."""
    return np.maximum(coupling_lower_bound(rho, psi, theta, rates, chain),
                      coupling_lower_bound(rho, psi, theta, rates.reversed(chain), chain))


def tagged_sums(rho, psi, theta, rates: CouplingRates, chain: MappingChain, use_I=True):
    """Per-tag sums of m c c_cpl I (or J) plus the matching absolute scale."""
    rho, psi = as_density(rho), np.asarray(psi, dtype=float)
    J, I = _j_i(rho, psi, theta, *_states(chain, rates.eta, rates.sigma, rates.gamma, rates.gammabar))
    w = _weights(rates, chain)
    term = w * (I if use_I else J)
    out = {}
    for t in sorted(set(rates.tag.tolist())):
        sel = rates.tag == t
        out[t] = (np.sum(term[..., sel], axis=-1), np.sum(np.abs(term[..., sel]), axis=-1))
    return out


@dataclass
class ContractivityReport:
    edges: list  # (eta, sigma)
    expanding_mass: np.ndarray
    merging_mass: np.ndarray


def contractivity_report(rates: CouplingRates, chain: MappingChain, d: np.ndarray) -> ContractivityReport:
    a, b, c, dd = _states(chain, rates.eta, rates.sigma, rates.gamma, rates.gammabar)
    after = d[c, dd]
    before = d[a, b]
    e = chain.edges
    keys = list(zip(e.src.tolist(), e.move.tolist()))
    index = {k: j for j, k in enumerate(keys)}
    exp_mass = np.zeros(len(keys))
    merge_mass = np.zeros(len(keys))
    for j, (x, s) in enumerate(zip(rates.eta.tolist(), rates.sigma.tolist())):
        k = index.get((x, s))
        if k is None:
            continue
        if after[j] > before[j]:
            exp_mass[k] += rates.rate[j]
        elif after[j] == 0:
            merge_mass[k] += rates.rate[j]
    return ContractivityReport(keys, exp_mass, merge_mass)
