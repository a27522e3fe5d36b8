"""Forecasting model families.

- :mod:`volcast.models.linear` — weighted least squares and the two-stage
  adaptive LASSO (ridge first stage, weighted L1 second stage).
- :mod:`volcast.models.csr` — complete subset regression machinery:
  submodel enumeration, discounted mean squared error weights, cluster-based
  forecast combination.
- :mod:`volcast.models.forest` — bagged regression trees with per-split
  feature subsampling and forced always-considered features.
- :mod:`volcast.models.registry` — model specifications and the mapping from
  feature roles to the eleven model configurations.
"""

from .registry import ModelSpec, build_model_specs  # noqa: F401
