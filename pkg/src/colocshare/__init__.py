"""Stochastic-geometry toolkit for resource and location sharing between operators.

Modules
-------
geometry
    Regions, Poisson point sampling and fixed-radius neighbour queries.
network
    Multi-operator tower/user realisation and disk-model association.
metrics
    User strength, channel capacity and coverage on a realised network.
analytics
    Closed-form strength, optimal radius, sharing gains and thresholds.
experiments
    Seeded replications, sweeps and figure datasets.
ingest
    Real base-station inventories: parsing, clustering, parameter estimation.
"""

from .kernels import HAVE_EXTENSION

__version__ = "0.1.0"

__all__ = ["HAVE_EXTENSION", "__version__"]
