"""
Monte-Carlo experiment service.
Generates one synthetic sequence per run, processes it with every configured mode on
the same data and merges the per-frame metrics of all runs into one report. Runs are
independent and execute in worker processes; the merged report depends only on the
configuration and the seed list.

Version: 1.0
"""

# External imports with versions
import time  # built-in
from concurrent.futures import ProcessPoolExecutor, as_completed  # built-in
from dataclasses import dataclass, field  # built-in
from typing import Any, Dict, List, Optional, Tuple  # built-in

import numpy as np  # numpy v1.24+
import structlog  # structlog v23.1+

# Internal imports
from reprocs.config.settings import get_settings
from reprocs.core.exceptions import ReProCSException, ValidationException
from reprocs.models.frames import FrameSequence
from reprocs.models.metrics import MetricsReport
from reprocs.models.subspace import SubspaceEstimate
from reprocs.schemas.experiment import ExperimentConfig
from reprocs.schemas.pipeline import PipelineConfig
from reprocs.services.pipeline_service import ReProCSPipeline, evaluate, track_rows
from reprocs.services.recovery_service import resolve_gamma
from reprocs.services.synth_service import generate_sequence, min_foreground_magnitude
from reprocs.utils.file_handlers import load_checkpoint, read_frames

# Configure structured logging
logger = structlog.get_logger(__name__)


@dataclass
class ModeComparison:
    """Metric rows of several modes run on one sequence."""
    rows: List[Dict[str, Any]] = field(default_factory=list)
    track_rows: List[Dict[str, Any]] = field(default_factory=list)
    failures: List[Dict[str, Any]] = field(default_factory=list)


def resolve_run_gamma(config: ExperimentConfig) -> Optional[float]:
    """gamma from the pipeline config, None when no configured mode needs it."""
    pipeline = config.pipeline
    if pipeline.gamma is None and pipeline.gamma_fraction is None:
        return None
    return resolve_gamma(pipeline.gamma, pipeline.gamma_fraction, min_foreground_magnitude(config.support))


def direction_sets(sequence: FrameSequence, background: Optional[np.ndarray] = None) -> Dict[str, np.ndarray]:
    """Generator basis columns entering and decaying after training, when known."""
    if sequence.basis is None or background is not None:
        return {}
    sets = {}
    if sequence.added_directions:
        sets["added"] = sequence.basis[:, sequence.added_directions]
    if sequence.decayed_directions:
        sets["decayed"] = sequence.basis[:, sequence.decayed_directions]
    return sets


def compare_modes(
    sequence: FrameSequence,
    pipeline: PipelineConfig,
    modes: List[str],
    run_index: int,
    gamma: Optional[float] = None,
    compose_mode: str = "additive",
    estimate: Optional[SubspaceEstimate] = None,
    directions: Optional[Dict[str, np.ndarray]] = None
) -> ModeComparison:
    """
    Runs each mode on the same sequence from the same initial estimate.
    A failing mode is recorded and does not stop the others.
    """
    comparison = ModeComparison()
    psi = np.asarray(pipeline.psi, dtype=np.float64) if pipeline.psi is not None else None
    for mode in modes:
        try:
            runner = ReProCSPipeline(pipeline, gamma=gamma, mode=mode)
            initial = estimate if estimate is not None else runner.initialize(sequence.M[:, :sequence.train_count])
            run = runner.run(sequence, estimate=initial, directions=directions)
            comparison.rows.extend(evaluate(sequence, run, run_index, compose_mode, psi))
            comparison.track_rows.extend(track_rows(sequence, run, run_index))
        except ReProCSException as e:
            logger.warning("mode_failed", run=run_index, mode=mode, error=e.message)
            comparison.failures.append({"run": run_index, "mode": mode, "error": e.message})
        except Exception as e:
            logger.error("mode_crashed", run=run_index, mode=mode, error=str(e), exc_info=True)
            comparison.failures.append({"run": run_index, "mode": mode, "error": str(e)})
    return comparison


def _simulate_run(args: Tuple[ExperimentConfig, int, int, Optional[np.ndarray]]) -> MetricsReport:
    """
    One Monte-Carlo run: generate, initialize, process every mode.
    Module level so that worker processes can pickle it.
    """
    config, run_index, seed, background = args
    try:
        sequence = generate_sequence(
            config.generator,
            config.support,
            config.t0,
            config.horizon,
            compose_mode=config.compose_mode,
            seed=seed,
            background=background,
        )
        checkpoint = config.pipeline.subspace.checkpoint
        estimate = load_checkpoint(checkpoint) if checkpoint else None
        comparison = compare_modes(
            sequence,
            config.pipeline,
            config.modes,
            run_index,
            gamma=resolve_run_gamma(config),
            compose_mode=config.compose_mode,
            estimate=estimate,
            directions=direction_sets(sequence, background),
        )
    except Exception as e:
        message = e.message if isinstance(e, ReProCSException) else str(e)
        logger.warning("run_failed", run=run_index, seed=seed, error=message)
        return MetricsReport.from_rows([], failed_runs=[{"run": run_index, "mode": None, "seed": seed, "error": message}])
    failures = [{**f, "seed": seed} for f in comparison.failures]
    return MetricsReport.from_rows(comparison.rows, failed_runs=failures, track_rows=comparison.track_rows)


def load_background(config: ExperimentConfig) -> Optional[np.ndarray]:
    """
    Real background frames replacing the generated low-rank part.

    Raises:
        ValidationException: If the file has too few frames or the wrong size
    """
    if config.background_frames is None:
        return None
    frames = read_frames(config.background_frames)
    needed = config.t0 + config.horizon
    if frames.shape[0] != config.generator.n or frames.shape[1] < needed:
        raise ValidationException(
            f"Background file holds {frames.shape[1]} frames of size {frames.shape[0]}; need {needed} of size {config.generator.n}",
            details={"path": config.background_frames, "shape": list(frames.shape)}
        )
    return frames


def run_experiment(config: ExperimentConfig, jobs: Optional[int] = None) -> MetricsReport:
    """
    Runs config.mc_runs independent runs and merges their metrics.

    Args:
        config: Validated experiment configuration
        jobs: Worker processes; defaults to config.jobs, then the settings default

    Returns:
        MetricsReport: per-frame rows sorted by (run, mode, t) and per-run failures
    """
    started = time.perf_counter()
    workers = get_settings().resolve_jobs(jobs if jobs is not None else config.jobs)
    background = load_background(config)
    seeds = config.run_seeds()
    tasks = [(config, r, seed, background) for r, seed in enumerate(seeds)]
    logger.info(
        "experiment_started",
        name=config.name,
        runs=len(tasks),
        modes=config.modes,
        workers=min(workers, len(tasks)),
        n=config.generator.n,
        t0=config.t0,
        horizon=config.horizon,
    )

    report = MetricsReport()
    if workers <= 1 or len(tasks) <= 1:
        for task in tasks:
            report = report.merge(_simulate_run(task))
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as executor:
            futures = {executor.submit(_simulate_run, task): task[1] for task in tasks}
            for future in as_completed(futures):
                run_index = futures[future]
                try:
                    part = future.result()
                except Exception as e:
                    logger.error("worker_failed", run=run_index, error=str(e))
                    part = MetricsReport.from_rows(
                        [], failed_runs=[{"run": run_index, "mode": None, "seed": seeds[run_index], "error": str(e)}]
                    )
                report = report.merge(part)

    logger.info(
        "experiment_finished",
        name=config.name,
        frames=int(len(report.frames)),
        failed_runs=len(report.failed_runs),
        elapsed_seconds=round(time.perf_counter() - started, 3),
    )
    return report
