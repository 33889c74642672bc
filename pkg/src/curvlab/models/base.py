from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..chain import MappingChain
from ..couplings import CouplingRates
from ..weights import WeightFunction


@dataclass
class Assumption:
    name: str
    ok: bool
    witness: object = None
    value: float | None = None


@dataclass
class ModelInstance:
    """A model chain with its hand-built coupling and theorem constants.

    ``cancelling_tags`` name the coupling-table groups whose I-sums vanish
    identically; ``coarse_bound`` is the lower bound expected for the
    continuous-time infinity-coarse curvature over neighbour pairs.
    """

    name: str
    chain: MappingChain
    rates: CouplingRates
    kappa_star: float | None
    kappa_bar_star: float | None
    assumptions: list
    params: dict
    theorem: Callable[[float], float]
    cancelling_tags: tuple = ()
    coarse_bound: float | None = None
    report: dict = field(default_factory=dict)

    @property
    def hypotheses_met(self) -> bool:
        return all(a.ok for a in self.assumptions)

    def theorem_K(self, theta) -> float:
        """Theorem constant for a weight (its closed-form M) or a numeric M."""
        if isinstance(theta, WeightFunction):
            if theta.m_theta is None:
                raise ValueError(f"weight {theta.label} has no closed-form M_theta")
            theta = theta.m_theta
        return float(self.theorem(float(theta)))

    def summary(self) -> dict:
        return {
            "model": self.name,
            "params": self.params,
            "n_states": self.chain.n,
            "kappa_star": self.kappa_star,
            "kappa_bar_star": self.kappa_bar_star,
            "hypotheses_met": self.hypotheses_met,
            "assumptions": [
                {"name": a.name, "ok": bool(a.ok), "value": a.value, "witness": _jsonable(a.witness)}
                for a in self.assumptions
            ],
            "coarse_bound": self.coarse_bound,
            **{k: _jsonable(v) for k, v in self.report.items()},
        }


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (tuple, list)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


def spin_states(n_sites: int) -> np.ndarray:
    """Spin configurations of {-1,+1}^n; state k has site i up iff bit i of k is set."""
    codes = np.arange(2**n_sites)
    bits = (codes[:, None] >> np.arange(n_sites)[None, :]) & 1
    return 2 * bits - 1
