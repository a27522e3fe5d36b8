"""``volcast`` command line: synth -> ingest -> features -> backtest -> evaluate.

Every stage reads and writes plain CSV/JSON artifacts under the configured
output directory, so stages can be rerun independently.  Exit codes: 0 ok,
1 usage/config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import pandas as pd

from . import attention, backtest, evaluation, features, market_data, realized, synth
from .config import ConfigError, RunConfig, default_config_toml, load_config
from .models.registry import build_model_specs

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

DATA_ERRORS = (
    market_data.PriceDataError,
    attention.FeatureInputError,
    FileNotFoundError,
    KeyError,
)


def _load_run_config(ctx) -> RunConfig:
    opts = ctx.obj
    if not opts.get("config"):
        raise click.UsageError("--config is required")
    return load_config(opts["config"], seed=opts.get("seed"), jobs=opts.get("jobs"))


# ---------------------------------------------------------------------------
# stages


def stage_synth(cfg: RunConfig) -> None:
    if cfg.synth is None:
        raise ConfigError("no [synth] section in the config")
    logger.info("synthesizing %d stocks into %s", cfg.synth_stocks, cfg.prices_dir.parent)
    out_root = cfg.prices_dir.parent
    synth.simulate_dataset(out_root, cfg.synth_stocks, cfg.synth)
    if cfg.prices_dir != out_root / "prices" or cfg.features_dir != out_root / "features":
        raise ConfigError(
            "synth writes <root>/prices and <root>/features; point paths.prices/features there"
        )


def _session_end(cfg: RunConfig):
    import datetime as dt

    start = market_data.SESSION_START
    minutes = start.hour * 60 + start.minute + cfg.session_minutes - 1
    return dt.time(minutes // 60, minutes % 60)


def stage_ingest(cfg: RunConfig) -> None:
    out = cfg.output_dir / "realized"
    out.mkdir(parents=True, exist_ok=True)
    bt = cfg.backtest
    span = cfg.weight_days or (bt.estimation_window + bt.calibration_window)
    for symbol in cfg.resolve_symbols():
        panel = market_data.load_prices(
            cfg.prices_dir / f"{symbol}.csv", symbol, session_end=_session_end(cfg)
        )
        frame = realized.compute_records(panel, step=cfg.step, alpha=cfg.jump_alpha)
        if frame.empty:
            raise market_data.PriceDataError(f"{symbol}: no usable trading days")
        # overnight/intraday weights from the pre-forecast history only, fixed
        # per stock so one target definition spans the whole evaluation
        head = frame.iloc[: min(span, len(frame))]
        try:
            weights = realized.estimate_on_in_weights(
                head["rv_on"].to_numpy(), head["rv_in"].to_numpy()
            )
        except ValueError as exc:
            logger.warning("%s: %s; keeping proxy weights (1, 1)", symbol, exc)
            weights = (1.0, 1.0)
        frame = realized.reweight_whole_day(frame, weights)
        frame.to_csv(out / f"{symbol}.csv")
        logger.info("%s: %d realized days, weights (%.4f, %.4f)", symbol, len(frame), *weights)


def stage_features(cfg: RunConfig) -> None:
    out = cfg.output_dir / "matrices"
    out.mkdir(parents=True, exist_ok=True)
    for symbol in cfg.resolve_symbols():
        rframe = pd.read_csv(
            cfg.output_dir / "realized" / f"{symbol}.csv", index_col="date", parse_dates=True
        )
        calendar = pd.DatetimeIndex(rframe.index)
        manifest = cfg.features_dir / symbol / "manifest.json"
        feat = attention.build_features(manifest, calendar) if manifest.exists() else None
        if feat is None:
            logger.warning("%s: no feature manifest; realized-only matrix", symbol)
        for h in cfg.backtest.horizons:
            matrix = features.build_feature_matrix(rframe, feat, horizon=h)
            matrix.to_csv(out / f"{symbol}_h{h}.csv")
            features.write_column_manifest(matrix, out / f"{symbol}_h{h}.roles.json")
        logger.info("%s: %d matrix rows", symbol, len(matrix))


def _read_matrix(path: Path) -> pd.DataFrame:
    matrix = pd.read_csv(path, index_col="date", parse_dates=True)
    roles = json.loads(path.with_suffix("").with_suffix(".roles.json").read_text())
    matrix.attrs["roles"] = roles
    return matrix


def stage_backtest(cfg: RunConfig) -> None:
    mat_dir = cfg.output_dir / "matrices"
    data: dict[str, dict[int, pd.DataFrame]] = {}
    roles = None
    for symbol in cfg.resolve_symbols():
        data[symbol] = {}
        for h in cfg.backtest.horizons:
            matrix = _read_matrix(mat_dir / f"{symbol}_h{h}.csv")
            data[symbol][h] = matrix
            roles = matrix.attrs["roles"]
    specs = build_model_specs(roles, cfg.models)
    frame, audits = backtest.run_backtest(data, specs, cfg.backtest, jobs=cfg.jobs)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    frame.to_csv(cfg.output_dir / "forecasts.csv", index=False, float_format="%.12g")
    serializable = {
        sym: {
            model: {
                str(h): [
                    [str(getattr(date, "date", lambda: date)()), [list(s) for s in subs]]
                    for date, subs in days
                ]
                for h, days in by_h.items()
            }
            for model, by_h in by_model.items()
        }
        for sym, by_model in audits.items()
    }
    (cfg.output_dir / "audits.json").write_text(json.dumps(serializable))
    logger.info("wrote %d forecasts", len(frame))


def _load_audits(path: Path) -> dict:
    if not path.exists():
        return {}
    raw = json.loads(path.read_text())
    return {
        sym: {
            model: {
                int(h): [(date, [tuple(s) for s in subs]) for date, subs in days]
                for h, days in by_h.items()
            }
            for model, by_h in by_model.items()
        }
        for sym, by_model in raw.items()
    }


def stage_evaluate(cfg: RunConfig) -> None:
    forecasts = pd.read_csv(cfg.output_dir / "forecasts.csv", parse_dates=["date"])
    if forecasts.empty:
        raise ConfigError("forecasts.csv is empty; nothing to evaluate")
    audits = _load_audits(cfg.output_dir / "audits.json")
    sectors = None
    if cfg.sectors is not None:
        if cfg.sectors.exists():
            table = pd.read_csv(cfg.sectors)
            sectors = table.set_index("symbol")["sector"]
        else:
            logger.warning("sectors file %s missing; skipping sector panel", cfg.sectors)
    csr_models = tuple(m for m in cfg.models if m.startswith("CSR"))
    evaluation.write_report(
        forecasts,
        cfg.output_dir / "report",
        audits=audits,
        sectors=sectors,
        benchmark=cfg.evaluation.benchmark,
        alpha=cfg.evaluation.alpha,
        n_boot=cfg.evaluation.n_boot,
        seed=cfg.backtest.seed,
        csr_models=csr_models,
    )
    logger.info("report written to %s", cfg.output_dir / "report")


# ---------------------------------------------------------------------------
# click wiring


@click.group()
@click.option("--config", "config_path", type=click.Path(), help="TOML run config.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--jobs", type=int, default=None, help="Worker processes.")
@click.option("-v", "--verbose", count=True, help="-v info, -vv debug.")
@click.pass_context
def cli(ctx, config_path, seed, jobs, verbose):
    """Volatility forecasting pipeline on minute prices and attention data."""
    logging.basicConfig(
        level=logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = {"config": config_path, "seed": seed, "jobs": jobs}


def _stage_command(name, func, help_text):
    @cli.command(name, help=help_text)
    @click.pass_context
    def _cmd(ctx):
        func(_load_run_config(ctx))

    return _cmd


_stage_command("synth", stage_synth, "Generate a synthetic data bundle.")
_stage_command("ingest", stage_ingest, "Minute prices -> daily realized measures.")
_stage_command("features", stage_features, "Realized + attention -> model matrices.")
_stage_command("backtest", stage_backtest, "Rolling forecasts -> forecasts.csv.")
_stage_command("evaluate", stage_evaluate, "Losses, tests and the report bundle.")


@cli.command("pipeline", help="Run every stage in order (synth only if configured).")
@click.pass_context
def _pipeline(ctx):
    cfg = _load_run_config(ctx)
    if cfg.synth is not None:
        stage_synth(cfg)
    else:
        logger.info("no [synth] section; starting from ingest")
    for stage in (stage_ingest, stage_features, stage_backtest, stage_evaluate):
        logger.info("stage %s", stage.__name__)
        stage(cfg)


@cli.command("init-config", help="Print a fully documented default config.")
def _init_config():
    click.echo(default_config_toml(), nl=False)


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as exc:  # --help and friends
        return EXIT_OK if exc.exit_code == 0 else EXIT_USAGE
    except (click.UsageError, ConfigError) as exc:
        click.echo(f"usage error: {exc}", err=True)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA
    except click.Abort:
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - defensive
        logger.exception("internal error")
        click.echo(f"internal error: {exc}", err=True)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
