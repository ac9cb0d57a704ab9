"""Command-line interface for s3mamba."""

import json
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import NoReturn

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.progress import Progress
from rich.progress import SpinnerColumn
from rich.progress import TextColumn
from rich.table import Table

from .config.logging import configure_logging
from .config.logging import get_logger
from .config.settings import settings
from .core.exceptions import CheckpointError
from .core.exceptions import ConfigurationError
from .core.exceptions import DataError
from .core.exceptions import DivergenceError
from .core.exceptions import S3MambaError
from .core.exceptions import VerificationError
from .core.models import RunConfig
from .data.corpus import write_corpus
from .data.imageio import load_image
from .data.imageio import save_image
from .data.pipeline import Dataset
from .data.rng import derive_seed
from .training.ablation import DECODER_VARIANTS
from .training.ablation import MODULE_VARIANTS
from .training.ablation import run_ablation
from .training.ablation import write_ablation_csv
from .training.checkpoint import export_float32
from .training.checkpoint import load_model
from .training.evaluation import consistency_probe
from .training.evaluation import evaluate_model
from .training.evaluation import write_eval_csv
from .training.trainer import Trainer
from .training.trainer import checkpoint_name
from .verify.bench import run_bench
from .verify.bench import write_bench_csv
from .verify.oracles import run_checks

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

EFFECTIVE_CONFIG = "config.effective.json"
VAL_STREAM = 1

# Initialize CLI app
app = typer.Typer(
    name="s3mamba",
    help="Scale-modulated state space models for arbitrary-scale super-resolution",
    add_completion=False,
    pretty_exceptions_enable=False,
)

console = Console()
logger = get_logger(__name__)


def _fail(message: str, code: int) -> NoReturn:
    console.print(f"[bold red]✗[/bold red] {message}")
    raise typer.Exit(code)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map library errors onto the documented exit codes."""
    try:
        yield
    except DivergenceError as e:
        logger.error("training_diverged", epoch=e.epoch, step=e.step, sample_seed=e.sample_seed)
        _fail(str(e), EXIT_DIVERGED)
    except VerificationError as e:
        _fail(str(e), EXIT_FAILED)
    except (CheckpointError, ConfigurationError, DataError, ValidationError) as e:
        _fail(str(e), EXIT_USAGE)
    except OSError as e:
        _fail(f"{e.filename or 'file'}: {e.strerror or e}", EXIT_USAGE)
    except S3MambaError as e:
        logger.error("command_failed", error=str(e))
        _fail(str(e), EXIT_FAILED)


def parse_floats(value: str) -> list[float]:
    """``"2,3,3.5"`` -> ``[2.0, 3.0, 3.5]``."""
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"expected comma-separated numbers, got {value!r}") from e


def parse_ints(value: str) -> list[int]:
    """``"1024,2048"`` -> ``[1024, 2048]``."""
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"expected comma-separated integers, got {value!r}") from e


def load_run_config(path: Path | None) -> RunConfig:
    """Parse a JSON run configuration; no path means all defaults."""
    if path is None:
        return RunConfig()
    if not path.is_file():
        _fail(f"config file not found: {path}", EXIT_USAGE)
    try:
        return RunConfig.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        _fail(f"invalid config {path}:\n{e}", EXIT_USAGE)


def write_effective_config(directory: Path, cfg: RunConfig) -> Path:
    """Echo the configuration with every default filled in."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / EFFECTIVE_CONFIG
    payload = json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True)
    path.write_text(payload + "\n", encoding="utf-8")
    return path


def _check_scales(scales: list[float]) -> None:
    if not scales or any(s <= 0 for s in scales):
        _fail(f"scales must be positive, got {scales}", EXIT_USAGE)


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose logging"),
    debug: bool = typer.Option(
        False, "--debug", help="Check every tensor for NaN/Inf (slow)"
    ),
) -> None:
    """s3mamba - arbitrary-scale super-resolution with scale-modulated scans."""
    if verbose:
        settings.log_level = "DEBUG"
    if debug:
        settings.debug = True

    configure_logging()


@app.command()
def version() -> None:
    """Show the current version."""
    console.print(f"[bold blue]s3mamba[/bold blue] version [bold]{settings.version}[/bold]")


@app.command()
def config(
    run_config: Path | None = typer.Option(
        None, "--run-config", help="Also print this run configuration with defaults applied"
    ),
) -> None:
    """Show current configuration."""
    table = Table(title="s3mamba Settings")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")

    table.add_row("Environment", settings.environment)
    table.add_row("Log Level", settings.log_level)
    table.add_row("Debug Mode", str(settings.debug))
    table.add_row("Workers", str(settings.workers))
    table.add_row("Bench Ratio Limit", f"{settings.bench_ratio_limit:g}")

    console.print(table)
    if run_config is not None:
        cfg = load_run_config(run_config)
        console.print_json(cfg.model_dump_json())


@app.command("gen-data")
def gen_data(
    out: Path = typer.Option(..., "--out", help="Corpus directory (train/ and val/ are created)"),
    n: int = typer.Option(32, "--n", min=0, help="Training images"),
    n_val: int = typer.Option(0, "--n-val", min=0, help="Held-out images written to val/"),
    size: int = typer.Option(96, "--size", help="Image side in pixels (>= 96)"),
    seed: int = typer.Option(0, "--seed", min=0, help="Corpus seed"),
) -> None:
    """Write a procedural PNG corpus with its manifest."""
    with _exit_codes():
        manifest = write_corpus(out / "train", n, size, seed)
        if n_val:
            write_corpus(out / "val", n_val, size, derive_seed(seed, VAL_STREAM))
    console.print(
        f"[bold green]✓[/bold green] wrote {manifest.count} training and {n_val} "
        f"validation images to {out}"
    )


@app.command()
def train(
    config_path: Path | None = typer.Option(None, "--config", help="JSON run configuration"),
    out: Path = typer.Option(Path("runs/default"), "--out", help="Run directory"),
    resume: Path | None = typer.Option(None, "--resume", help="Continue from this checkpoint"),
    float32: bool = typer.Option(
        False, "--float32", help="Also export the final checkpoint with 32-bit storage"
    ),
) -> None:
    """Train a model; writes checkpoints, train_log.csv and the effective config."""
    cfg = load_run_config(config_path)
    with _exit_codes():
        if resume is not None:
            if not resume.is_file():
                _fail(f"checkpoint not found: {resume}", EXIT_USAGE)
            if config_path is not None:
                logger.warning("resume_ignores_config", config=str(config_path))
            trainer = Trainer.resume(resume, out_dir=out)
        else:
            trainer = Trainer(cfg, Dataset.from_config(cfg.data), out)
        write_effective_config(out, trainer.cfg)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
        ) as progress:
            task = progress.add_task("Training...", total=None)
            history = trainer.fit()
            progress.update(task, description="Training completed!")
        final = out / checkpoint_name(trainer.epoch)
        if float32 and final.exists():
            export_float32(final, final.with_name(final.stem + "_f32.s3mb"))

    table = Table(title="Training")
    table.add_column("Epoch", style="cyan")
    table.add_column("Loss", style="green")
    table.add_column("LR")
    for row in history[-5:]:
        table.add_row(str(row.epoch), f"{row.loss:.5f}", f"{row.lr:.2e}")
    console.print(table)
    if not history:
        console.print("[yellow]no epochs to run; model left at initialization[/yellow]")
        return
    console.print(f"[bold green]✓[/bold green] final checkpoint {final}")


@app.command("eval")
def eval_command(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint to evaluate"),
    corpus: Path = typer.Option(..., "--corpus", help="Directory of GT images (or one with val/)"),
    scales: str = typer.Option("2,3,3.5,4,6", "--scales", help="Comma-separated magnifications"),
    out: Path = typer.Option(Path("eval.csv"), "--out", help="CSV report"),
    consistency: bool = typer.Option(
        False, "--consistency", help="Also report cross-scale consistency PSNR"
    ),
) -> None:
    """PSNR (RGB, Y) and SSIM of the model and the bicubic baseline per scale."""
    scale_list = parse_floats(scales)
    _check_scales(scale_list)
    if not ckpt.is_file():
        _fail(f"checkpoint not found: {ckpt}", EXIT_USAGE)
    with _exit_codes():
        model, cfg = load_model(ckpt)
        dataset = Dataset.from_directory(corpus, cfg.data)
        cfg = cfg.model_copy(update={"eval": cfg.eval.model_copy(update={"scales": scale_list})})
        rows = evaluate_model(
            model, dataset.val, scale_list, cfg.eval.shave, scale_max=cfg.data.scale_max
        )
        write_eval_csv(out, rows)
        write_effective_config(out.parent, cfg)
        probe = consistency_probe(model, dataset.val, scale_list) if consistency else []

    table = Table(title=f"Evaluation ({len(dataset.val)} images)")
    table.add_column("Scale", style="cyan")
    table.add_column("Method")
    table.add_column("PSNR RGB", style="green")
    table.add_column("PSNR Y", style="green")
    table.add_column("SSIM", style="green")
    for row in rows:
        table.add_row(
            f"x{row.scale:g}", row.method, f"{row.psnr_rgb:.2f}", f"{row.psnr_y:.2f}", f"{row.ssim:.4f}"
        )
    console.print(table)
    for p in probe:
        console.print(f"consistency x{p.scale:g}: {p.psnr:.2f} dB")
    console.print(f"[bold green]✓[/bold green] wrote {out}")


@app.command()
def upscale(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint to use"),
    input_path: Path = typer.Option(..., "--in", help="Input PNG/PPM image"),
    scale: float = typer.Option(..., "--scale", help="Magnification (non-integer allowed)"),
    out: Path = typer.Option(..., "--out", help="Output image (PNG, or PPM by suffix)"),
) -> None:
    """Query every output cell center: ``h x w`` -> ``floor(h*s) x floor(w*s)``."""
    if scale <= 0:
        _fail(f"scale must be positive, got {scale}", EXIT_USAGE)
    if not ckpt.is_file():
        _fail(f"checkpoint not found: {ckpt}", EXIT_USAGE)
    with _exit_codes():
        lr = load_image(input_path)
        model, _ = load_model(ckpt)
        sr = model.upscale(lr, scale)
        save_image(out, sr)
    console.print(
        f"[bold green]✓[/bold green] {lr.shape[2]}x{lr.shape[1]} -> "
        f"{sr.shape[2]}x{sr.shape[1]} written to {out}"
    )


@app.command()
def verify(
    quick: bool = typer.Option(False, "--quick", help="Fewer random trials, no model gradient check"),
    inject_abar_error: float = typer.Option(
        0.0, "--inject-abar-error", hidden=True, help="Perturb abar in the ZOH check (gate test)"
    ),
) -> None:
    """Run the oracle suite; exit 1 if any check fails."""
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console,
    ) as progress:
        task = progress.add_task("Running checks...", total=None)
        results = run_checks(inject_abar_error=inject_abar_error, quick=quick)
        progress.update(task, description="Checks finished")

    table = Table(title="Verification")
    table.add_column("Check", style="cyan")
    table.add_column("Result")
    table.add_column("Seconds")
    table.add_column("Detail")
    for r in results:
        mark = "[green]pass[/green]" if r.passed else "[red]FAIL[/red]"
        table.add_row(r.name, mark, f"{r.seconds:.2f}", r.detail)
    console.print(table)

    failed = [r.name for r in results if not r.passed]
    if failed:
        _fail(f"failed checks: {', '.join(failed)}", EXIT_FAILED)
    console.print(f"[bold green]✓[/bold green] all {len(results)} checks passed")


@app.command("bench-scan")
def bench_scan(
    lengths: str = typer.Option("1024,2048,4096", "--lengths", help="Ascending sequence lengths"),
    repeat: int = typer.Option(5, "--repeat", min=1, help="Timed runs per length"),
    out: Path = typer.Option(Path("bench_scan.csv"), "--out", help="CSV report"),
) -> None:
    """Time the sequential and blocked scans and check near-linear growth."""
    length_list = parse_ints(lengths)
    if not length_list or any(n < 1 for n in length_list):
        _fail(f"lengths must be positive, got {lengths}", EXIT_USAGE)
    if length_list != sorted(length_list):
        _fail(f"lengths must be ascending, got {lengths}", EXIT_USAGE)
    with _exit_codes():
        rows = run_bench(length_list, repeat)
        write_bench_csv(out, rows)

    table = Table(title="Scan benchmark")
    table.add_column("Impl", style="cyan")
    table.add_column("Length")
    table.add_column("Median ms", style="green")
    for row in rows:
        table.add_row(row.impl, str(row.length), f"{row.median_ms:.3f}")
    console.print(table)
    console.print(f"[bold green]✓[/bold green] wrote {out}")


@app.command()
def ablate(
    config_path: Path | None = typer.Option(None, "--config", help="Base JSON run configuration"),
    out: Path = typer.Option(Path("runs/ablation"), "--out", help="Output directory"),
    grid: str = typer.Option("decoder", "--grid", help="'decoder' (mlp/ssm/sssm) or 'modules'"),
    seeds: str = typer.Option("0,1,2", "--seeds", help="Comma-separated seeds"),
    scales: str = typer.Option("2,3,4", "--scales", help="Validation magnifications"),
) -> None:
    """Train each variant under each seed and tabulate median validation PSNR."""
    grids = {"decoder": DECODER_VARIANTS, "modules": MODULE_VARIANTS}
    if grid not in grids:
        _fail(f"unknown grid {grid!r}; choose from {sorted(grids)}", EXIT_USAGE)
    scale_list = parse_floats(scales)
    _check_scales(scale_list)
    seed_list = parse_ints(seeds)
    if not seed_list:
        _fail("at least one seed is required", EXIT_USAGE)
    cfg = load_run_config(config_path)
    with _exit_codes():
        write_effective_config(out, cfg)
        rows = run_ablation(cfg, grids[grid], seed_list, scale_list)
        write_ablation_csv(out / "ablation.csv", rows)

    table = Table(title=f"Ablation ({grid})")
    table.add_column("Variant", style="cyan")
    table.add_column("Parameters")
    table.add_column("Spread")
    for scale in scale_list:
        table.add_column(f"PSNR x{scale:g}", style="green")
    for r in rows:
        table.add_row(
            r.variant,
            str(r.parameters),
            f"{r.param_spread:+.1%}",
            *[f"{v:.2f}" for v in r.psnr.values()],
        )
    console.print(table)


if __name__ == "__main__":
    app()
