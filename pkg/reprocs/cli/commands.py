"""
Command handlers behind the reprocs command line.
Every handler returns a process exit code: 0 on success, 2 on validation or
configuration errors, 3 on runtime failures.

Version: 1.0
"""

# External imports with versions
import sys  # built-in
from pathlib import Path  # built-in
from typing import Iterable, List, Optional, Union  # built-in

import structlog  # structlog v23.1+

# Internal imports
from reprocs.cli.presets import preset_config
from reprocs.config.settings import get_settings
from reprocs.core.config import apply_overrides, build_config, load_experiment_config
from reprocs.core.exceptions import EXIT_OK, EXIT_RUNTIME, ValidationException, handle_exception
from reprocs.core.logging import log_error
from reprocs.schemas.experiment import ExperimentConfig, ExperimentPreset
from reprocs.services.experiment_service import load_background, run_experiment
from reprocs.services.report_service import write_report
from reprocs.services.subspace_service import init_truncated_svd
from reprocs.services.synth_service import generate_sequence
from reprocs.utils.file_handlers import read_frames, save_checkpoint, write_ground_truth

# Configure structured logging
logger = structlog.get_logger(__name__)


def _fail(command: str, exc: Exception) -> int:
    error = handle_exception(exc)
    log_error(logger, exc, f"{command}_failed", {"exit_code": error["exit_code"]})
    print(f"error: {error['detail']}", file=sys.stderr)
    return error["exit_code"]


def _run_overrides(
    overrides: Iterable[str],
    seed: Optional[int],
    mc_runs: Optional[int]
) -> List[str]:
    extra = list(overrides)
    if seed is not None:
        extra.append(f"seed={seed}")
    if mc_runs is not None:
        extra.append(f"mc_runs={mc_runs}")
    return extra


def resolve_run_config(
    preset: Optional[str] = None,
    config_path: Optional[Union[str, Path]] = None,
    overrides: Iterable[str] = (),
    seed: Optional[int] = None,
    mc_runs: Optional[int] = None,
    full_scale: bool = False
) -> ExperimentConfig:
    """
    Experiment configuration from a preset name or a TOML file, with overrides applied.

    Raises:
        ConfigurationException: If neither or both sources are given, or validation fails
    """
    if (preset is None) == (config_path is None):
        raise ValidationException("Give exactly one of a preset name or --config")
    extra = _run_overrides(overrides, seed, mc_runs)
    if config_path is not None:
        return load_experiment_config(config_path, extra)
    try:
        spec = ExperimentPreset(name=preset, full_scale=full_scale)
    except ValueError as e:
        raise ValidationException(str(e), details={"key": "preset"})
    data = preset_config(spec)
    apply_overrides(data, extra)
    return build_config(data)


def cmd_run(
    preset: Optional[str] = None,
    config_path: Optional[Union[str, Path]] = None,
    overrides: Iterable[str] = (),
    seed: Optional[int] = None,
    mc_runs: Optional[int] = None,
    jobs: Optional[int] = None,
    out_dir: Optional[Union[str, Path]] = None,
    full_scale: bool = False
) -> int:
    """
    Runs an experiment and writes frames.csv, summary.csv, plot-data CSVs and tracks.csv.
    Reports are written even when some runs failed; the exit code is then 3.
    """
    try:
        config = resolve_run_config(preset, config_path, overrides, seed, mc_runs, full_scale)
    except Exception as e:
        return _fail("run", e)

    out = Path(out_dir) if out_dir is not None else get_settings().OUTPUT_DIR / config.name
    try:
        report = run_experiment(config, jobs=jobs)
        write_report(report, out)
    except Exception as e:
        return _fail("run", e)
    if report.failed_runs:
        logger.warning("run_completed_with_failures", failed=len(report.failed_runs), out=str(out))
        return EXIT_RUNTIME
    logger.info("run_completed", experiment=config.name, out=str(out))
    return EXIT_OK


def cmd_generate(
    spec_path: Union[str, Path],
    out_dir: Union[str, Path],
    overrides: Iterable[str] = (),
    seed: Optional[int] = None
) -> int:
    """
    Generates one sequence from an experiment file and writes M, L, S, O and the support
    indicator as frame files into out_dir.
    """
    try:
        config = load_experiment_config(spec_path, _run_overrides(overrides, seed, None))
    except Exception as e:
        return _fail("generate", e)
    try:
        sequence = generate_sequence(
            config.generator,
            config.support,
            config.t0,
            config.horizon,
            compose_mode=config.compose_mode,
            seed=config.run_seeds()[0],
            background=load_background(config),
        )
        written = write_ground_truth(out_dir, sequence)
    except Exception as e:
        return _fail("generate", e)
    logger.info("generate_completed", out=str(out_dir), streams=sorted(written), frames=sequence.count)
    return EXIT_OK


def cmd_ingest(
    frames_path: Union[str, Path],
    train_count: int,
    out_path: Union[str, Path],
    alpha0: float = 0.0,
    tau: int = 20,
    alpha: Optional[float] = None,
    energy: Optional[float] = None
) -> int:
    """
    Mean-subtracting truncated-SVD initialization over the first train_count frames of a
    frame file, saved as a basis checkpoint for overlay runs.
    """
    try:
        frames = read_frames(frames_path)
        if not 0 < train_count <= frames.shape[1]:
            raise ValidationException(
                f"train_count must lie in [1, {frames.shape[1]}]",
                details={"train_count": train_count, "frames": int(frames.shape[1])}
            )
        estimate = init_truncated_svd(
            frames[:, :train_count],
            alpha0=alpha0,
            subtract_mean=True,
            tau=tau,
            alpha=alpha,
            energy=energy,
        )
        save_checkpoint(out_path, estimate)
    except Exception as e:
        return _fail("ingest", e)
    logger.info("ingest_completed", out=str(out_path), rank=estimate.rank, train_count=train_count)
    return EXIT_OK
