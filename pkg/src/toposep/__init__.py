"""Separability transitions of decohered topological codes.

Exact and sampled classical statistical-mechanics machinery (random-bond
Ising and gauge models, flavored replica models) together with dense
quantum oracles for small tori.
"""

__version__ = "0.1.0"
