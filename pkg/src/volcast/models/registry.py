"""Model specifications and the standard eleven-model configuration.

A :class:`ModelSpec` names the always-included base features (intercept plus
daily and weekly volatility, never penalized or subsampled away), the
candidate features the family may select from, and family hyperparameters.
The standard configuration is derived from the feature matrix's column roles,
so the variable registry stays data-driven.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

BASE_FEATURES = ("intercept", "rv_d", "rv_w")

FAMILIES = ("wls", "ala", "csr", "rf")

#: candidate set of the CSR benchmark: the five variance components at the
#: daily/weekly/monthly horizons (15 variables)
CSR_BENCHMARK_CANDIDATES = tuple(
    f"{comp}_{suffix}"
    for comp in ("sj", "jc", "cc", "rs_neg", "rs_pos")
    for suffix in ("d", "w", "m")
)

STANDARD_MODELS = (
    "HAR",
    "CSR-HAR",
    "HAR-M",
    "HAR-A",
    "HAR-S",
    "ALA-A",
    "ALA-S",
    "CSR-A",
    "CSR-S",
    "RF-A",
    "RF-S",
)


@dataclass(frozen=True)
class ModelSpec:
    """One forecasting model configuration."""

    name: str
    family: str
    base_features: tuple[str, ...]
    candidate_features: tuple[str, ...] = ()
    hyper: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        overlap = set(self.base_features) & set(self.candidate_features)
        if overlap:
            raise ValueError(f"{self.name}: base/candidate overlap {sorted(overlap)}")
        if self.family != "wls" and not self.candidate_features:
            raise ValueError(f"{self.name}: family {self.family!r} needs candidates")


def _by_role(roles: dict[str, str], wanted: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(c for c, r in roles.items() if r in wanted)


def build_model_specs(
    roles: dict[str, str], names: tuple[str, ...] = STANDARD_MODELS, hyper: dict | None = None
) -> list[ModelSpec]:
    """Instantiate model specs from feature-column roles.

    ``roles`` maps column name to role (as produced by the feature matrix);
    ``hyper`` optionally maps model name to a hyperparameter override dict.
    """
    hyper = hyper or {}
    attention = _by_role(roles, ("attention_general", "attention_macro", "analyst"))
    sentiment = _by_role(roles, ("sentiment_general", "sentiment_macro"))
    att_general = _by_role(roles, ("attention_general",))
    sent_general = _by_role(roles, ("sentiment_general",))
    interactions = _by_role(roles, ("interaction",))

    har_base = BASE_FEATURES + ("rv_m",)
    catalog: dict[str, ModelSpec] = {}

    def add(name, family, base, candidates=()):
        catalog[name] = ModelSpec(
            name=name,
            family=family,
            base_features=tuple(base),
            candidate_features=tuple(candidates),
            hyper=dict(hyper.get(name, {})),
        )

    add("HAR", "wls", har_base)
    add("HAR-M", "wls", har_base + interactions)
    add("HAR-A", "wls", har_base + att_general)
    add("HAR-S", "wls", har_base + sent_general)
    add("CSR-HAR", "csr", BASE_FEATURES, CSR_BENCHMARK_CANDIDATES)
    add("CSR-A", "csr", BASE_FEATURES, ("rv_m",) + attention)
    add("CSR-S", "csr", BASE_FEATURES, ("rv_m",) + sentiment)
    add("ALA-A", "ala", BASE_FEATURES, ("rv_m",) + attention)
    add("ALA-S", "ala", BASE_FEATURES, ("rv_m",) + sentiment)
    add("RF-A", "rf", BASE_FEATURES, ("rv_m",) + attention)
    add("RF-S", "rf", BASE_FEATURES, ("rv_m",) + sentiment)

    unknown = [n for n in names if n not in catalog]
    if unknown:
        raise ValueError(f"unknown model names: {unknown}")
    return [catalog[n] for n in names]


def design_matrix(frame: pd.DataFrame, columns: tuple[str, ...]) -> np.ndarray:
    """Column-stack features, materializing the intercept."""
    parts = []
    for c in columns:
        if c == "intercept":
            parts.append(np.ones(len(frame)))
        else:
            parts.append(frame[c].to_numpy(dtype=float))
    return np.column_stack(parts) if parts else np.empty((len(frame), 0))
