"""Command-line interface for neurosym using Typer.

Subcommands run the comparison study, export interpretable rules, score new
process parameters with a saved model, and produce the sine augmentation
demo. Exit codes: 0 success, 1 usage error, 2 data/validation/I/O error.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Optional, Sequence

import numpy as np
import typer
from dotenv import load_dotenv
from pydantic import ValidationError

from .augment import export_sine_demo, sine_demo
from .config import (
    ExperimentConfig,
    ModelKind,
    OUT_DIR_ENV,
    check_paths,
    load_config,
    resolve_output_dir,
)
from .data import ScalerStats, format_float, parse_inputs
from .errors import ModelFormatError, NeurosymError
from .experiment import compare as compare_models
from .experiment import run_neurosymbolic, run_simple_ann
from .experiment import sweep as sweep_seeds
from .metrics import ModelReport
from .mlp import extract_features, load_params, predict as mlp_predict
from .symtree import export_rules, feature_usage, load_tree, predict_many

app = typer.Typer(
    help="Neural features + symbolic regression tree for FDM impact strength",
    no_args_is_help=True,
    add_completion=False,
)

EXIT_USAGE = 1
EXIT_DATA = 2


def _click_class(name: str) -> Any:
    """Exception class from whichever click build typer itself raises (bundled or external)."""

    return next(c for c in typer.BadParameter.__mro__ if c.__name__ == name)


UsageError = _click_class("UsageError")
ClickException = _click_class("ClickException")


@app.callback()
def _root(
    verbose: int = typer.Option(
        0, "--verbose", "-v", count=True, help="-v for progress, -vv for per-epoch loss"
    ),
) -> None:
    load_dotenv()
    level = (logging.WARNING, logging.INFO)[verbose] if verbose < 2 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@contextmanager
def _data_errors() -> Iterator[None]:
    try:
        yield
    except (NeurosymError, ValidationError, OSError) as e:
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=EXIT_DATA) from None


def _build_config(
    config_path: Optional[Path],
    data: Optional[Path],
    seed: Optional[int],
    out_dir: Optional[Path],
    split_first: bool,
    model: Optional[ModelKind],
) -> ExperimentConfig:
    config = load_config(config_path) if config_path is not None else ExperimentConfig()
    config = config.with_overrides(
        data_path=data,
        seed=seed,
        split_first=True if split_first else None,
        model_kind=model,
    )
    check_paths(config)
    return resolve_output_dir(config, out_dir)


def _echo_reports(reports: dict[str, ModelReport]) -> None:
    typer.echo(f"{'algorithm':<15}{'mse_train':>12}{'mse_val':>12}{'r2_train':>10}{'r2_val':>10}")
    for name, r in reports.items():
        mse_cols = f"{r.mse_train:>12.5f}{r.mse_val:>12.5f}"
        typer.echo(f"{name:<15}{mse_cols}{r.r2_train:>10.4f}{r.r2_val:>10.4f}")


def _config_opt() -> typer.models.OptionInfo:
    return typer.Option(None, "--config", help="JSON experiment config")


def _data_opt() -> typer.models.OptionInfo:
    return typer.Option(None, "--data", help="Dataset CSV (default: bundled table)")


def _out_dir_opt() -> typer.models.OptionInfo:
    return typer.Option(None, "--out-dir", help=f"Artifact directory (env: {OUT_DIR_ENV})")


def _split_first_opt() -> typer.models.OptionInfo:
    return typer.Option(
        False, "--split-first", help="Split the originals before augmenting each part"
    )


def _seed_opt() -> typer.models.OptionInfo:
    return typer.Option(None, "--seed", help="Seed for augmentation, split and training")


@app.command("train")
def train_cmd(
    config_path: Optional[Path] = _config_opt(),
    data: Optional[Path] = _data_opt(),
    seed: Optional[int] = _seed_opt(),
    out_dir: Optional[Path] = _out_dir_opt(),
    split_first: bool = _split_first_opt(),
    model: Optional[ModelKind] = typer.Option(None, "--model", help="Which model(s) to run"),
) -> None:
    """Train and evaluate the selected model(s)."""

    with _data_errors():
        config = _build_config(config_path, data, seed, out_dir, split_first, model)
        if config.model_kind is ModelKind.both:
            reports = compare_models(config).reports
        elif config.model_kind is ModelKind.simple_ann:
            reports = {ModelKind.simple_ann.value: run_simple_ann(config)[0]}
        else:
            reports = {ModelKind.neurosymbolic.value: run_neurosymbolic(config)[0]}
    _echo_reports(reports)
    typer.echo(f"artifacts: {config.output_dir}")


@app.command("compare")
def compare_cmd(
    config_path: Optional[Path] = _config_opt(),
    data: Optional[Path] = _data_opt(),
    seed: Optional[int] = _seed_opt(),
    out_dir: Optional[Path] = _out_dir_opt(),
    split_first: bool = _split_first_opt(),
) -> None:
    """Run both models on one split and write comparison.csv."""

    with _data_errors():
        config = _build_config(config_path, data, seed, out_dir, split_first, ModelKind.both)
        table = compare_models(config)
    _echo_reports(table.reports)
    for metric, winner in table.winners().items():
        typer.echo(f"best {metric}: {winner}")
    typer.echo(f"comparison: {Path(config.output_dir) / 'comparison.csv'}")


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated integers, got {text!r}") from None


@app.command("sweep")
def sweep_cmd(
    config_path: Optional[Path] = _config_opt(),
    data: Optional[Path] = _data_opt(),
    seeds: str = typer.Option("0,1,2,3,4", "--seeds", help="Comma-separated seeds"),
    out_dir: Optional[Path] = _out_dir_opt(),
    split_first: bool = _split_first_opt(),
    workers: int = typer.Option(1, "--workers", min=1, help="Parallel runs"),
) -> None:
    """Compare both models across several seeds and report median validation MSE."""

    seed_list = _parse_seeds(seeds)
    if not seed_list:
        raise typer.BadParameter("at least one seed is required", param_hint="--seeds")
    with _data_errors():
        config = _build_config(config_path, data, None, out_dir, split_first, ModelKind.both)
        result = sweep_seeds(config, seed_list, max_workers=workers)
    for name in ("simple_ann", "neurosymbolic"):
        typer.echo(f"median mse_val {name}: {result.median_val_mse(name):.6f}")
    typer.echo(f"sweep: {Path(config.output_dir) / 'sweep.csv'}")


@app.command("sine-demo")
def sine_demo_cmd(
    n_original: int = typer.Option(40, "--n-original", min=1),
    n_synthetic: int = typer.Option(500, "--n-synthetic", min=1),
    noise_sd: float = typer.Option(0.1, "--noise-sd", min=0.0),
    seed: int = typer.Option(0, "--seed"),
    out_dir: Optional[Path] = _out_dir_opt(),
) -> None:
    """Write sine_demo_original.csv and sine_demo_synthetic.csv."""

    with _data_errors():
        target = resolve_output_dir(ExperimentConfig(output_dir=Path("runs/sine_demo")), out_dir)
        original, synthetic = sine_demo(n_original, n_synthetic, noise_sd, seed)
        paths = export_sine_demo(original, synthetic, target.output_dir, prefix="sine_demo_")
    for p in paths:
        typer.echo(str(p))


@app.command("export-rules")
def export_rules_cmd(
    tree_path: Path = typer.Option(..., "--tree", help="tree.json written by a run"),
    decimals: int = typer.Option(2, "--decimals", min=0, help="Leaf value rounding"),
    exact: bool = typer.Option(False, "--exact", help="Write leaf values unrounded"),
) -> None:
    """Print the fitted tree as indented if/then/else rules."""

    with _data_errors():
        tree = load_tree(tree_path)
    typer.echo(export_rules(tree, decimals=None if exact else decimals), nl=False)
    usage = ", ".join(f"f{k}x{v}" for k, v in feature_usage(tree).items())
    typer.echo(f"# features used: {usage or 'none'}")


@app.command("predict")
def predict_cmd(
    model_path: Path = typer.Option(..., "--model", help="model.nsmlp written by a run"),
    data: Path = typer.Option(..., "--data", help="CSV of process parameters"),
    tree_path: Optional[Path] = typer.Option(
        None, "--tree", help="Score with the neurosymbolic tree instead of the network head"
    ),
) -> None:
    """Predict impact strength (kJ/m^2) for each row of a process-parameter CSV."""

    with _data_errors():
        saved = load_params(model_path)
        if "scaler" not in saved.extra:
            raise ModelFormatError("model file carries no scaler statistics")
        scaler = ScalerStats.from_dict(saved.extra["scaler"])
        X = scaler.transform(parse_inputs(data.read_text(encoding="utf-8")))
        if tree_path is not None:
            preds = predict_many(load_tree(tree_path), extract_features(saved.params, X))
        else:
            preds = mlp_predict(saved.params, X)
    typer.echo("index,predicted")
    for i, p in enumerate(np.asarray(preds)):
        typer.echo(f"{i},{format_float(p)}")


def main(argv: Sequence[str] | None = None) -> int:
    """Console entry point; returns the process exit code."""

    try:
        args = list(argv) if argv is not None else None
        rv = app(args=args, prog_name="neurosym", standalone_mode=False)
    except UsageError as e:
        e.show()
        return EXIT_USAGE
    except ClickException as e:
        e.show()
        return e.exit_code
    except typer.Abort:
        return EXIT_USAGE
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    raise SystemExit(main())
