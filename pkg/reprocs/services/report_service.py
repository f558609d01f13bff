"""
CSV emission of experiment reports: per-frame metrics, summary, plot data and tracks.

Version: 1.0
"""

# External imports with versions
from pathlib import Path  # built-in
from typing import Dict, List, Union  # built-in

import pandas as pd  # pandas v2.0+
import structlog  # structlog v23.1+

# Internal imports
from reprocs.models.metrics import MetricsReport
from reprocs.utils.file_handlers import atomic_write_text

# Configure structured logging
logger = structlog.get_logger(__name__)

FRAMES_FILE = "frames.csv"
SUMMARY_FILE = "summary.csv"
TRACKS_FILE = "tracks.csv"
FAILURES_FILE = "failed_runs.csv"
FAILURE_COLUMNS = ["run", "mode", "seed", "error"]

# Plot-data files: name -> per-frame columns averaged over runs
PLOT_FILES: Dict[str, List[str]] = {
    "plot_nmse.csv": ["nmse_s", "nmse_l", "nmse_o"],
    "plot_support_errors.csv": ["misses_pred", "extras_pred", "misses_upd", "extras_upd"],
    "plot_alignment.csv": ["alignment_added", "alignment_decayed", "rank"],
}


def _write_csv(path: Path, frame: pd.DataFrame) -> Path:
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def plot_data(report: MetricsReport, columns: List[str]) -> pd.DataFrame:
    """
    Long-format plot table (mode, t, one column per metric).
    NMSE columns are ratios of run-summed errors and norms; other columns are run means.
    """
    out = []
    for mode in report.modes:
        table = pd.DataFrame()
        for column in columns:
            if column.startswith("nmse_"):
                curve = pd.Series(report.per_frame_nmse(column[len("nmse_"):], mode))
                table[column] = curve.to_numpy()
            else:
                table[column] = report.mean_curve(column, mode).to_numpy()
        table.insert(0, "t", report.mean_curve("t", mode).index.to_numpy())
        table.insert(0, "mode", mode)
        out.append(table)
    if not out:
        return pd.DataFrame(columns=["mode", "t", *columns])
    return pd.concat(out, ignore_index=True)


def write_report(report: MetricsReport, out_dir: Union[str, Path], include_tracks: bool = True) -> Dict[str, Path]:
    """
    Writes every report file into out_dir.

    Returns:
        Mapping of file name to written path
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {
        FRAMES_FILE: _write_csv(out_dir / FRAMES_FILE, report.frames),
        SUMMARY_FILE: _write_csv(out_dir / SUMMARY_FILE, report.summary()),
    }
    for name, columns in PLOT_FILES.items():
        written[name] = _write_csv(out_dir / name, plot_data(report, columns))
    if include_tracks and not report.tracks.empty:
        written[TRACKS_FILE] = _write_csv(out_dir / TRACKS_FILE, report.tracks)
    failures = pd.DataFrame(report.failed_runs, columns=FAILURE_COLUMNS)
    written[FAILURES_FILE] = _write_csv(out_dir / FAILURES_FILE, failures)
    logger.info("report_written", directory=str(out_dir), files=sorted(written))
    return written
