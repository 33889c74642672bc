"""Entropies, Dirichlet forms and the weighted quadratic forms A, B = C - D.

All functions accept densities/test functions as arrays whose last axis runs
over states, so a batch of samples can be evaluated in one call.  Sums over
edges run in the chain's edge order and use numpy's pairwise summation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .chain import MappingChain
from .weights import EntropyGenerator, WeightFunction, weight_for_generator

EPS_MIN = 1e-12


class FlooredDensityWarning(UserWarning):
    pass


def as_density(rho, eps: float = EPS_MIN) -> np.ndarray:
    """Copy of ``rho`` with entries below ``eps`` raised to ``eps`` (warns)."""
    rho = np.array(rho, dtype=float)
    if np.any(~np.isfinite(rho)):
        raise ValueError("density has non-finite entries")
    low = rho < eps
    if np.any(low):
        warnings.warn(f"{int(low.sum())} density entries floored at {eps:g}",
                      FlooredDensityWarning, stacklevel=2)
        rho[low] = eps
    return rho


def normalize(rho, chain: MappingChain) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return rho / (rho @ chain.measure)[..., None] if rho.ndim > 1 else rho / (rho @ chain.measure)


def phi_entropy(rho, gen: EntropyGenerator, chain: MappingChain):
    rho = np.asarray(rho, dtype=float)
    m = chain.measure
    return gen.phi(rho) @ m - gen.phi(rho @ m)


def dirichlet_form(f, g, chain: MappingChain):
    f = np.asarray(f, dtype=float)
    return -np.sum(chain.measure * f * chain.apply_generator(g), axis=-1)


def phi_fisher(rho, gen: EntropyGenerator, chain: MappingChain):
    rho = np.asarray(rho, dtype=float)
    return dirichlet_form(rho, gen.phi_prime(rho), chain)


@dataclass
class FormValues:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray


def forms(rho, psi, theta: WeightFunction, chain: MappingChain) -> FormValues:
    """Evaluate A, C, D and B = C - D for (batched) rho and psi."""
    rho = as_density(rho)
    psi = np.asarray(psi, dtype=float)
    e = chain.edges
    w = e.weight
    r_i, r_j = rho[..., e.src], rho[..., e.dst]
    dpsi = psi[..., e.src] - psi[..., e.dst]
    th = theta(r_i, r_j)
    gs, gt = theta.grad(r_i, r_j)
    l_rho = chain.apply_generator(rho)
    l_psi = chain.apply_generator(psi)
    drift = gs * l_rho[..., e.src] + gt * l_rho[..., e.dst]
    A = 0.5 * np.sum(w * th * dpsi**2, axis=-1)
    C = 0.25 * np.sum(w * drift * dpsi**2, axis=-1)
    D = 0.5 * np.sum(w * th * dpsi * (l_psi[..., e.src] - l_psi[..., e.dst]), axis=-1)
    return FormValues(A, C - D, C, D)


def quad_A(rho, psi, theta: WeightFunction, chain: MappingChain):
    return forms(rho, psi, theta, chain).A


def quad_B(rho, psi, theta: WeightFunction, chain: MappingChain, parts: bool = False):
    """B(rho, psi); with ``parts=True`` returns the triple (B, C, D)."""
    fv = forms(rho, psi, theta, chain)
    return (fv.B, fv.C, fv.D) if parts else fv.B


@dataclass
class QuadraticFormPair:
    A_mat: np.ndarray
    B_mat: np.ndarray


def _edge_laplacian(n, src, dst, coef):
    """Matrix of psi -> sum coef * (psi[src] - psi[dst])**2."""
    M = np.zeros((n, n))
    np.add.at(M, (src, src), coef)
    np.add.at(M, (dst, dst), coef)
    np.add.at(M, (src, dst), -coef)
    np.add.at(M, (dst, src), -coef)
    return M


def assemble_forms(rho, theta: WeightFunction, chain: MappingChain) -> QuadraticFormPair:
    """Symmetric matrices with psi^T A_mat psi = A(rho, psi) and likewise for B."""
    rho = as_density(rho)
    e = chain.edges
    r_i, r_j = rho[e.src], rho[e.dst]
    th = theta(r_i, r_j)
    gs, gt = theta.grad(r_i, r_j)
    l_rho = chain.apply_generator(rho)
    A_mat = _edge_laplacian(chain.n, e.src, e.dst, 0.5 * e.weight * th)
    C_mat = _edge_laplacian(chain.n, e.src, e.dst,
                            0.25 * e.weight * (gs * l_rho[e.src] + gt * l_rho[e.dst]))
    # D(psi) = psi^T A_mat L psi
    AL = A_mat @ chain.generator_sparse.toarray()
    B_mat = C_mat - 0.5 * (AL + AL.T)
    return QuadraticFormPair(A_mat, 0.5 * (B_mat + B_mat.T))


def gamma(f, g, chain: MappingChain) -> np.ndarray:
    """Carre du champ: 1/2 sum_moves c (f(s eta) - f(eta)) (g(s eta) - g(eta))."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    e = chain.edges
    prod = 0.5 * e.rate * (f[..., e.dst] - f[..., e.src]) * (g[..., e.dst] - g[..., e.src])
    return chain.sum_over_moves(prod)


def gamma2(f, chain: MappingChain) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return 0.5 * chain.apply_generator(gamma(f, f, chain)) - gamma(f, chain.apply_generator(f), chain)


@dataclass
class BakryEmeryValues:
    lhs: float
    rhs_base: float
    fisher: float


def bakry_emery_specialization(rho, gen: EntropyGenerator, chain: MappingChain,
                               theta: WeightFunction | None = None) -> BakryEmeryValues:
    """B and A evaluated at psi = phi'(rho) with the weight induced by phi."""
    rho = as_density(rho)
    theta = theta or weight_for_generator(gen)
    psi = gen.phi_prime(rho)
    fv = forms(rho, psi, theta, chain)
    return BakryEmeryValues(float(fv.B), float(fv.A), float(phi_fisher(rho, gen, chain)))
