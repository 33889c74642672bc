import numpy as np
import pytest
from conftest import random_reversible
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab.chain import MappingChain, graph_distance
from curvlab.couplings import (CouplingRates, I_term, J_term, contractivity_report, coupling_lower_bound,
                               product_coupling, symmetrized_lower_bound, tagged_sums,
                               validate_coupling_rates)
from curvlab.functionals import forms
from curvlab.models import bernoulli_laplace, curie_weiss, ising
from curvlab.models.glauber import kappa_table
from curvlab.weights import arithmetic_mean, log_mean


def marginal_error(rates, chain):
    """Largest non-identity marginal mismatch, summed entry by entry."""
    ident = chain.identity
    worst = 0.0
    e = chain.edges
    for x, s in zip(e.src.tolist(), e.move.tolist()):
        y = chain.maps[s, x]
        table = rates.edge(x, s)
        for g in range(chain.move_set.n_moves):
            if g == ident:
                continue
            row = sum(r for (a, _), r in table.items() if a == g)
            col = sum(r for (_, b), r in table.items() if b == g)
            worst = max(worst, abs(row - chain.rates[x, g]), abs(col - chain.rates[y, g]))
    return worst


def test_swap_product_coupling(swap):
    cpl = product_coupling(swap)
    assert cpl.edge(0, 1) == {(1, 1): 1.0}
    assert validate_coupling_rates(cpl, swap).ok


def test_product_coupling_on_random_chains(rng):
    for n in (3, 4, 5):
        chain = MappingChain.from_rate_matrix(random_reversible(n, rng)[0])
        cpl = product_coupling(chain)
        assert validate_coupling_rates(cpl, chain).ok
        assert marginal_error(cpl, chain) <= 1e-12


def test_model_tables_validate():
    cases = [curie_weiss(2, 0.3), ising(3, 0.05), bernoulli_laplace(3, 1), bernoulli_laplace(4, 2)]
    for inst in cases:
        rep = validate_coupling_rates(inst.rates, inst.chain, 1e-12)
        assert rep.ok, (inst.name, rep.worst_violation)
        assert marginal_error(inst.rates, inst.chain) <= 1e-12


def test_perturbation_is_detected():
    inst = curie_weiss(2, 0.3)
    rate = inst.rates.rate.copy()
    rate[3] += 1e-3
    rep = validate_coupling_rates(inst.rates.with_rate(rate), inst.chain)
    assert not rep.ok
    assert rep.worst_violation == pytest.approx(1e-3, rel=1e-6)


def test_identity_freedom_is_recorded(swap):
    cpl = CouplingRates.from_mapping({(0, 1): {(1, 1): 1.0, (0, 0): 0.7}, (1, 1): {(1, 1): 1.0}})
    rep = validate_coupling_rates(cpl, swap)
    assert rep.ok
    assert rep.e_adjustments == [(0, 1, 0.7, 0.7)]


def test_negative_entries_fail(swap):
    cpl = CouplingRates.from_mapping({(0, 1): {(1, 1): 1.0, (0, 0): -0.5}, (1, 1): {(1, 1): 1.0}})
    rep = validate_coupling_rates(cpl, swap)
    assert not rep.ok and rep.negative_entries == 1


def test_json_round_trip():
    inst = bernoulli_laplace(3, 1)
    again = CouplingRates.from_json(inst.rates.to_json())
    assert validate_coupling_rates(again, inst.chain).ok


def test_j_and_i_terms(swap):
    rho, psi = np.ones(2), np.array([0.0, 1.0])
    th = arithmetic_mean()
    assert J_term(0, 1, 1, 0, rho, psi, th, swap) == pytest.approx(2.0)
    # merged pair: the cross term vanishes and J is a square
    j = J_term(0, 1, 1, 1, np.array([0.3, 2.0]), psi, th, swap)
    assert j >= 0
    assert J_term(0, 1, 1, 0, rho, np.ones(2), th, swap) == 0.0
    assert I_term(0, 1, 1, 0, rho, np.ones(2), th, swap) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_j_dominates_i(seed):
    inst = curie_weiss(3, 0.2)
    r = np.random.default_rng(seed)
    rho = r.dirichlet(np.ones(8)) / inst.chain.measure
    psi = r.standard_normal(8)
    c = inst.rates
    J = J_term(c.eta, c.sigma, c.gamma, c.gammabar, rho, psi, log_mean(), inst.chain)
    I = I_term(c.eta, c.sigma, c.gamma, c.gammabar, rho, psi, log_mean(), inst.chain)
    assert np.all(J - I >= -1e-12 * (np.abs(J) + np.abs(I) + 1))


def test_lower_bound_below_B(rng):
    inst = curie_weiss(3, 0.2)
    rho = rng.dirichlet(np.ones(8), 100) / inst.chain.measure
    psi = rng.standard_normal((100, 8))
    for th in (log_mean(), arithmetic_mean()):
        B = forms(rho, psi, th, inst.chain).B
        lb = coupling_lower_bound(rho, psi, th, inst.rates, inst.chain)
        assert np.all(lb <= B + 1e-10 * np.abs(B))
        sym = symmetrized_lower_bound(rho, psi, th, inst.rates, inst.chain)
        assert np.all(sym >= lb) and np.all(sym <= B + 1e-10 * np.abs(B))
    assert coupling_lower_bound(rho[0], np.ones(8), log_mean(), inst.rates, inst.chain) == 0.0


def test_swap_bound_below_B(swap, rng):
    cpl = product_coupling(swap)
    for rho, psi in zip(rng.uniform(0.1, 3, (20, 2)), rng.standard_normal((20, 2))):
        B = forms(rho, psi, log_mean(), swap).B
        assert coupling_lower_bound(rho, psi, log_mean(), cpl, swap) <= B + 1e-12


def test_tagged_sums_add_up(rng):
    inst = curie_weiss(3, 0.2)
    rho = rng.dirichlet(np.ones(8), 10) / inst.chain.measure
    psi = rng.standard_normal((10, 8))
    tags = tagged_sums(rho, psi, log_mean(), inst.rates, inst.chain, use_I=False)
    total = sum(v for v, _ in tags.values())
    lb = coupling_lower_bound(rho, psi, log_mean(), inst.rates, inst.chain)
    assert np.allclose(0.25 * total, lb)


def test_contractivity():
    inst = curie_weiss(3, 0.2)
    d = graph_distance(inst.chain)
    rep = contractivity_report(inst.rates, inst.chain, d)
    assert np.all(rep.expanding_mass == 0)
    kappa = kappa_table(inst.chain.move_set, inst.chain.rates)
    for k, (x, s) in enumerate(rep.edges):
        y = inst.chain.maps[s, x]
        assert rep.merging_mass[k] >= kappa[y, s] + kappa[x, s] - 1e-12
    prod = contractivity_report(product_coupling(inst.chain), inst.chain, d)
    assert prod.expanding_mass.max() > 0
