from .base import Assumption, ModelInstance
from .exclusion import bernoulli_laplace, hardcore
from .glauber import curie_weiss, glauber, ising
from .random_walks import PRESETS, interacting_rw_localized

__all__ = [
    "Assumption", "ModelInstance", "glauber", "curie_weiss", "ising",
    "bernoulli_laplace", "hardcore", "interacting_rw_localized", "PRESETS",
]
