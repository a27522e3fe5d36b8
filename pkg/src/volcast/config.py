"""TOML run configuration for the command-line pipeline.

One file drives every stage.  Unknown sections or keys fail validation
before any compute, and every default is spelled out in
:func:`default_config_toml` so a run is fully documented by its config.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .backtest import BacktestConfig
from .models.registry import STANDARD_MODELS
from .synth import SynthConfig


class ConfigError(ValueError):
    """Raised for invalid or unknown configuration."""


@dataclass(frozen=True)
class EvaluationConfig:
    alpha: float = 0.05
    n_boot: int = 2000
    benchmark: str = "HAR"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"evaluation.alpha must be in (0, 1), got {self.alpha}")
        if self.n_boot < 1:
            raise ConfigError("evaluation.n_boot must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    """Everything one pipeline run needs."""

    prices_dir: Path
    features_dir: Path
    output_dir: Path
    sectors: Path | None = None
    symbols: tuple[str, ...] = ()  # empty: discover from prices_dir
    models: tuple[str, ...] = STANDARD_MODELS
    session_minutes: int = 391  # grid slots per day (open + minute closes)
    step: int = 5  # grid spacing (minutes) for realized measures
    jump_alpha: float = 0.01
    weight_days: int = 0  # 0: estimation+calibration span for ON/IN weights
    backtest: BacktestConfig = field(default_factory=BacktestConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    synth: SynthConfig | None = None
    synth_stocks: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.step < 1:
            raise ConfigError("step must be >= 1")
        if not 0 < self.jump_alpha < 0.5:
            raise ConfigError("jump_alpha must be in (0, 0.5)")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def resolve_symbols(self) -> tuple[str, ...]:
        if self.symbols:
            return self.symbols
        if not self.prices_dir.is_dir():
            raise ConfigError(f"prices directory not found: {self.prices_dir}")
        found = tuple(sorted(p.stem for p in self.prices_dir.glob("*.csv")))
        if not found:
            raise ConfigError(f"no price CSVs under {self.prices_dir}")
        return found


def _take(table: dict, section: str, allowed: set[str]) -> dict:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")
    return table


def load_config(
    path, seed: int | None = None, jobs: int | None = None
) -> RunConfig:
    """Parse and validate a TOML run configuration.

    ``seed`` and ``jobs`` override the file (command-line flags win).
    Relative paths resolve against the config file's directory.
    """
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    base = path.parent

    _take(raw, "top level", {"symbols", "models", "paths", "realized", "backtest", "evaluation", "synth"})

    paths = _take(raw.get("paths", {}), "paths", {"prices", "features", "output", "sectors"})
    for key in ("prices", "features", "output"):
        if key not in paths:
            raise ConfigError(f"[paths] must set {key!r}")

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    realized = _take(
        raw.get("realized", {}), "realized", {"step", "alpha", "weight_days", "session_minutes"}
    )

    bt_raw = _take(
        raw.get("backtest", {}),
        "backtest",
        {
            "estimation_window",
            "calibration_window",
            "horizons",
            "half_life",
            "seed",
            "hyper_refresh",
            "csr_delta",
            "rf_trees",
            "jobs",
        },
    )
    file_jobs = bt_raw.pop("jobs", 1)
    jobs_final = jobs if jobs is not None else file_jobs
    if seed is not None:
        bt_raw["seed"] = seed
    if "horizons" in bt_raw:
        bt_raw["horizons"] = tuple(int(h) for h in bt_raw["horizons"])
    try:
        bt = BacktestConfig(jump_alpha=realized.get("alpha", 0.01), **bt_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[backtest]: {exc}") from exc

    ev_raw = _take(raw.get("evaluation", {}), "evaluation", {"alpha", "n_boot", "benchmark"})
    ev = EvaluationConfig(**ev_raw)

    synth_cfg = None
    synth_stocks = 0
    if "synth" in raw:
        sy = dict(raw["synth"])
        allowed = {f.name for f in dataclasses.fields(SynthConfig)} | {"n_stocks"}
        _take(sy, "synth", allowed)
        synth_stocks = int(sy.pop("n_stocks", 1))
        if "start" in sy and not isinstance(sy["start"], dt.date):
            sy["start"] = dt.date.fromisoformat(str(sy["start"]))
        if seed is not None:
            sy["seed"] = seed
        try:
            synth_cfg = SynthConfig(**sy)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[synth]: {exc}") from exc

    models = tuple(raw.get("models", STANDARD_MODELS))
    return RunConfig(
        prices_dir=resolve(paths["prices"]),
        features_dir=resolve(paths["features"]),
        output_dir=resolve(paths["output"]),
        sectors=resolve(paths["sectors"]) if "sectors" in paths else None,
        symbols=tuple(raw.get("symbols", ())),
        models=models,
        session_minutes=int(
            realized.get(
                "session_minutes",
                synth_cfg.session_minutes if synth_cfg is not None else 391,
            )
        ),
        step=int(realized.get("step", 5)),
        jump_alpha=float(realized.get("alpha", 0.01)),
        weight_days=int(realized.get("weight_days", 0)),
        backtest=bt,
        evaluation=ev,
        synth=synth_cfg,
        synth_stocks=synth_stocks,
        jobs=int(jobs_final),
    )


def default_config_toml() -> str:
    """A fully documented config with every default stated explicitly."""
    return """\
# volcast run configuration.  Paths are relative to this file.

symbols = []                  # empty: every *.csv under paths.prices
models = [
  "HAR", "CSR-HAR", "HAR-M", "HAR-A", "HAR-S",
  "ALA-A", "ALA-S", "CSR-A", "CSR-S", "RF-A", "RF-S",
]

[paths]
prices = "data/prices"        # per-symbol minute CSVs (symbol,date,time,price)
features = "data/features"    # per-symbol dirs, each with manifest.json
output = "out"
sectors = "data/sectors.csv"  # optional symbol,sector table

[realized]
step = 5                      # 5-minute grids over 1-minute prices
alpha = 0.01                  # jump-test size
weight_days = 0               # ON/IN weight history; 0 = estimation+calibration span

[backtest]
estimation_window = 1000      # rolling fit window (rows)
calibration_window = 500      # hyperparameter/DMSE history (rows)
horizons = [1]
half_life = 125.0             # exponential observation-weight half-life (days)
hyper_refresh = 125           # re-tune lambdas / RF grid every this many forecasts
csr_delta = 0.95              # DMSE discount
rf_trees = 500                # bagged trees per forest
seed = 0
jobs = 1

[evaluation]
alpha = 0.05                  # pairwise confidence-set level
n_boot = 2000                 # moving-block bootstrap replicates
benchmark = "HAR"

[synth]                       # delete this section when running on real data
n_stocks = 5
n_days = 300
mean_daily_vol = 0.01
persistence = 0.98
vol_of_vol = 0.1
jump_intensity = 0.05
jump_size = 5.0
overnight_share = 0.2
attention_coef = 0.0
sentiment_coef = 0.0
start = "2015-01-02"
seed = 0
"""
