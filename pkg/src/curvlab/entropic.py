"""Checking and estimating the curvature inequality B(rho, psi) >= K A(rho, psi).

For a fixed density the best K is a generalized eigenvalue of the pair of
quadratic forms in psi; an outer search over densities gives an upper
estimate of the curvature, while couplings give sampled lower bounds.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.csgraph import connected_components

from .chain import MappingChain, graph_distance
from .couplings import CouplingRates, symmetrized_lower_bound
from .functionals import EPS_MIN, assemble_forms, forms, normalize, phi_entropy, phi_fisher
from .weights import EntropyGenerator, WeightFunction

COND_LIMIT = 1e14
JITTER = 1e-14


class DegenerateFormError(ValueError):
    """The A-form vanishes on more than the constants."""


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("CURVLAB_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# samplers


def sample_densities(chain: MappingChain, n: int, rng: np.random.Generator, law: str = "dirichlet",
                     spread: float = 1.0) -> np.ndarray:
    """Probability densities w.r.t. the stationary measure, one per row."""
    if law == "dirichlet":
        p = rng.dirichlet(np.ones(chain.n), size=n)
        rho = p / chain.measure
    elif law == "lognormal":
        rho = np.exp(spread * rng.standard_normal((n, chain.n)))
    else:
        raise ValueError(f"unknown density law {law!r}")
    return normalize(np.maximum(rho, EPS_MIN), chain)


def sample_functions(chain: MappingChain, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, chain.n))


def dirac_densities(chain: MappingChain, floor: float = 1e-8) -> np.ndarray:
    """rho = 1_eta / m(eta) for every state, other entries raised to ``floor``."""
    rho = np.full((chain.n, chain.n), floor)
    rho[np.arange(chain.n), np.arange(chain.n)] = 1.0 / chain.measure
    return rho


# --------------------------------------------------------------------------
# sampled inequality


def verify_inequality(chain: MappingChain, theta: WeightFunction, K: float, seed: int = 0,
                      n_samples: int = 1000, law: str = "dirichlet", batch: int = 1000) -> dict:
    """Check B - K A >= -1e-9 (|B| + K|A|) on sampled (rho, psi) pairs."""
    rng = np.random.default_rng(seed)
    best, witness = np.inf, None
    done = 0
    while done < n_samples:
        k = min(batch, n_samples - done)
        rho = sample_densities(chain, k, rng, law)
        psi = sample_functions(chain, k, rng)
        fv = forms(rho, psi, theta, chain)
        scale = np.abs(fv.B) + abs(K) * np.abs(fv.A)
        margin = (fv.B - K * fv.A) / np.where(scale > 0, scale, 1.0)
        j = int(np.argmin(margin))
        if margin[j] < best:
            best, witness = float(margin[j]), (rho[j], psi[j])
        done += k
    return {
        "ok": bool(best >= -1e-9),
        "min_margin": best,
        "witness": witness,
        "sampler": {"seed": seed, "n_samples": n_samples, "law": law},
    }


# --------------------------------------------------------------------------
# fixed-density curvature


_BASIS: dict = {}


def _complement_basis(n: int) -> np.ndarray:
    """Orthonormal basis of the vectors orthogonal to the constants."""
    if n not in _BASIS:
        _BASIS[n] = linalg.null_space(np.ones((1, n)))
    return _BASIS[n]


def _degeneracy_message(chain: MappingChain, rho, theta: WeightFunction) -> str:
    e = chain.edges
    coef = e.weight * theta(rho[e.src], rho[e.dst])
    keep = coef > 0
    adj = np.zeros((chain.n, chain.n))
    adj[e.src[keep], e.dst[keep]] = 1.0
    n_comp, labels = connected_components(adj, directed=False)
    groups = [np.flatnonzero(labels == c).tolist() for c in range(n_comp)]
    dead = sorted({(int(a), int(b)) for a, b in zip(e.src[~keep], e.dst[~keep])})
    return f"A-form kernel is larger than the constants: components {groups}, zero-weight edges {dead}"


def curvature_eig(chain: MappingChain, theta: WeightFunction, rho, return_witness: bool = False):
    """min over nonconstant psi of B(rho,psi) / A(rho,psi) for a fixed density."""
    rho = np.asarray(rho, dtype=float)
    pair = assemble_forms(rho, theta, chain)
    Q = _complement_basis(chain.n)
    A_r = Q.T @ pair.A_mat @ Q
    B_r = Q.T @ pair.B_mat @ Q
    A_r = 0.5 * (A_r + A_r.T)
    B_r = 0.5 * (B_r + B_r.T)
    a_eig = np.linalg.eigvalsh(A_r)
    if a_eig[0] <= 1e-300 or a_eig[0] <= a_eig[-1] * 1e-15 * chain.n:
        raise DegenerateFormError(_degeneracy_message(chain, rho, theta))
    if a_eig[-1] / a_eig[0] > COND_LIMIT:
        A_r = A_r + JITTER * np.diag(np.diag(A_r))
    vals, vecs = linalg.eigh(B_r, A_r, subset_by_index=[0, 0])
    value = float(vals[0])
    if not return_witness:
        return value
    psi = Q @ vecs[:, 0]
    return value, psi / np.linalg.norm(psi)


# --------------------------------------------------------------------------
# outer search over densities


@dataclass
class CurvatureEstimate:
    verified_lower: float
    eig_upper: float
    witnesses: tuple  # (rho*, psi*)
    sampler_spec: dict
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verified_lower": self.verified_lower,
            "eig_upper": self.eig_upper,
            "witness_rho": self.witnesses[0].tolist(),
            "witness_psi": self.witnesses[1].tolist(),
            "sampler": self.sampler_spec,
        }


def _evaluate(chain, theta, rhos, workers):
    def one(rho):
        try:
            return curvature_eig(chain, theta, rho, return_witness=True)
        except DegenerateFormError:
            return np.inf, None

    if workers > 1 and len(rhos) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, rhos))
    return [one(r) for r in rhos]


def _best(results):
    values = np.array([r[0] for r in results])
    j = int(np.argmin(values))  # first index wins ties
    return j, float(values[j])


def curvature_estimate(chain: MappingChain, theta: WeightFunction, seed: int = 0,
                       n_random: int = 256, n_tilts: int = 64, descent_steps: int = 50,
                       coupling: CouplingRates | None = None, include_dirac: bool = False,
                       dirac_floor: float = 1e-8, n_check: int = 256,
                       workers: int | None = None) -> CurvatureEstimate:
    """Upper estimate of the curvature by minimizing curvature_eig over densities.

    ``eig_upper`` is an upper bound on the true constant since the search is
    not exhaustive.  ``verified_lower`` is the smallest ratio of the coupling
    bound to A over the witnesses and random test functions (minus a relative
    slack), or -inf without a coupling table.
    """
    rng = np.random.default_rng(seed)
    workers = workers or _workers()
    candidates = [np.ones(chain.n)]
    candidates += list(sample_densities(chain, n_random, rng))
    if include_dirac:
        candidates += list(dirac_densities(chain, dirac_floor))
    results = _evaluate(chain, theta, candidates, workers)
    trace = [min(r[0] for r in results)]

    # exponential tilts of the current best witnesses
    if n_tilts > 0:
        order = np.argsort([r[0] for r in results], kind="stable")[: max(1, n_tilts // 8)]
        steps = np.linspace(-2.0, 2.0, 9)
        steps = steps[steps != 0]
        tilted = []
        for j in order:
            if results[j][1] is None:
                continue
            psi = results[j][1] / max(np.abs(results[j][1]).max(), 1e-300)
            for s in steps:
                rho = candidates[j] * np.exp(s * psi)
                tilted.append(normalize(np.maximum(rho, dirac_floor * rho.max()), chain))
        tilted = tilted[:n_tilts]
        candidates += tilted
        results += _evaluate(chain, theta, tilted, workers)
        trace.append(min(r[0] for r in results))

    # coordinate descent on log rho from the best candidate
    j, value = _best(results)
    log_rho = np.log(candidates[j])
    # keep rho within the dynamic range of the Dirac-like candidates
    log_floor = np.log(dirac_floor)
    step = 0.5
    for _ in range(descent_steps):
        improved = False
        for k in rng.permutation(chain.n):
            for sign in (1.0, -1.0):
                trial = log_rho.copy()
                trial[k] += sign * step
                trial = np.maximum(trial, trial.max() + log_floor)
                rho = normalize(np.exp(trial), chain)
                out = _evaluate(chain, theta, [rho], 1)[0]
                if out[0] < value - 1e-15 * max(1.0, abs(value)):
                    log_rho, value = np.log(rho), out[0]
                    candidates.append(rho)
                    results.append(out)
                    improved = True
                    break
        if not improved:
            step *= 0.5
            if step < 1e-6:
                break
    trace.append(value)

    j, eig_upper = _best(results)
    witness = (candidates[j], results[j][1])

    verified = -np.inf
    if coupling is not None:
        rhos = np.array([candidates[k] for k in range(len(candidates)) if results[k][1] is not None])
        psis = np.array([results[k][1] for k in range(len(candidates)) if results[k][1] is not None])
        extra_rho = sample_densities(chain, n_check, rng)
        extra_psi = sample_functions(chain, n_check, rng)
        rhos = np.vstack([rhos, extra_rho])
        psis = np.vstack([psis, extra_psi])
        lower = symmetrized_lower_bound(rhos, psis, theta, coupling, chain)
        A = forms(rhos, psis, theta, chain).A
        ok = A > 0
        ratio = lower[ok] / A[ok]
        verified = float(ratio.min() - 1e-9 * max(1.0, np.abs(ratio).max()))

    spec = {"seed": seed, "n_random": n_random, "n_tilts": n_tilts, "descent_steps": descent_steps,
            "include_dirac": include_dirac, "n_candidates": len(candidates)}
    return CurvatureEstimate(verified, eig_upper, witness, spec, trace)


# --------------------------------------------------------------------------
# Bakry-Emery constant


def _gamma_matrix(chain: MappingChain, x: int, index: dict, size: int) -> np.ndarray:
    """Matrix G with f^T G f = Gamma(f)(x), in the coordinates ``index``."""
    G = np.zeros((size, size))
    e = chain.edges
    sel = e.src == x
    a = index[x]
    for y, r in zip(e.dst[sel].tolist(), e.rate[sel].tolist()):
        b = index[y]
        G[a, a] += 0.5 * r
        G[b, b] += 0.5 * r
        G[a, b] -= 0.5 * r
        G[b, a] -= 0.5 * r
    return G


def cd_constant(chain: MappingChain, return_witness: bool = False):
    """Largest K with Gamma2(f) >= K Gamma(f) pointwise for every f.

    At each state the test function is fixed to 0 there, its values two
    steps away are eliminated by a Schur complement (Gamma does not see
    them), and the remaining problem on the neighbours is a symmetric
    generalized eigenproblem.
    """
    dist = graph_distance(chain)
    L = chain.generator_sparse.tocsr()
    best, arg = np.inf, None
    for x in range(chain.n):
        nbrs = np.flatnonzero(dist[x] == 1)
        far = np.flatnonzero(dist[x] == 2)
        ball = np.concatenate([[x], nbrs, far])
        index = {int(s): k for k, s in enumerate(ball)}
        size = ball.size
        L_ball = L[ball][:, ball].toarray()
        Q = -0.5 * (lambda G: G + G.T)(_gamma_matrix(chain, x, index, size) @ L_ball)
        for y in np.concatenate([[x], nbrs]):
            Q += 0.5 * L[x, int(y)] * _gamma_matrix(chain, int(y), index, size)
        G = _gamma_matrix(chain, x, index, size)
        v = np.arange(1, 1 + nbrs.size)
        w = np.arange(1 + nbrs.size, size)
        S = Q[np.ix_(v, v)]
        if w.size:
            S = S - Q[np.ix_(v, w)] @ np.linalg.solve(Q[np.ix_(w, w)], Q[np.ix_(w, v)])
        scale = 1.0 / np.sqrt(np.diag(G)[v])
        M = scale[:, None] * S * scale[None, :]
        vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
        if vals[0] < best:
            best = float(vals[0])
            f = np.zeros(chain.n)
            f[nbrs] = scale * vecs[:, 0]
            if w.size:
                f[far] = -np.linalg.solve(Q[np.ix_(w, w)], Q[np.ix_(w, v)] @ f[nbrs])
            arg = (x, f)
    return (best, arg) if return_witness else best


# --------------------------------------------------------------------------
# convex Sobolev inequality


def csi_report(chain: MappingChain, gen: EntropyGenerator, K: float, seed: int = 0,
               n_samples: int = 1000, law: str = "dirichlet") -> dict:
    """Check 2K H(rho) <= I(rho) on sampled densities.

    Densities with H below 1e-12 (essentially constant) are left out of the
    ratio; ``min_ratio`` is an upper bound on the optimal constant.
    """
    rng = np.random.default_rng(seed)
    rho = sample_densities(chain, n_samples, rng, law)
    rho = np.vstack([rho, dirac_densities(chain, 1e-6)])
    rho = normalize(rho, chain)
    H = phi_entropy(rho, gen, chain)
    I = phi_fisher(rho, gen, chain)
    keep = H > 1e-12
    ratio = I[keep] / H[keep]
    j = int(np.argmin(ratio))
    margin = I[keep] - 2 * K * H[keep]
    ok = bool(np.all(margin >= -1e-9 * (np.abs(I[keep]) + 2 * abs(K) * H[keep])))
    return {
        "csi_ok": ok,
        "min_ratio": float(ratio[j]),
        "witness": rho[keep][j],
        "n_used": int(keep.sum()),
        "sampler": {"seed": seed, "n_samples": n_samples, "law": law},
    }
