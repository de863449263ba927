"""Toolkit for the multi-objective chance-constrained multiple-choice knapsack
problem with sampled (implicit) weight distributions.

Modules:

* ``instances``     data model, benchmark generators, serialization
* ``distributions`` weight distribution specs, moments, backend rows
* ``sampling``      per-item oracles, surrogate weights, total-weight sampler
* ``evaluator``     fixed and staged Monte-Carlo confidence estimation
* ``moea``          dominance, sorting, selection, variation operators
* ``solver``        hybrid evolutionary solver and ablation variants
* ``metrics``       hypervolume, IGD, IGD+, feasible-solution ratio
* ``harness``       seeded experiment plans, evaluator comparison, emission
* ``backends``      compiled / numpy sampling kernels, selected at import
"""

from . import backends
from ._rng import derive_rng, derive_seed

__version__ = "0.1.0"
__all__ = ["backends", "derive_rng", "derive_seed", "__version__"]
