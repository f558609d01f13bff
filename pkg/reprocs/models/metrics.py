"""
Per-frame and aggregated reconstruction metrics.

Version: 1.0
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd  # pandas v2.0+

# Fixed per-frame CSV schema, one row per (run, mode, t)
FRAME_COLUMNS = [
    "run", "mode", "t",
    "nmse_s", "nmse_l", "nmse_o",
    "err_s", "norm_s", "err_l", "norm_l", "err_o", "norm_o",
    "misses_pred", "extras_pred", "misses_upd", "extras_upd",
    "alignment_added", "alignment_decayed",
    "rank", "epsilon", "support_size", "converged", "failed",
]

# Per-frame Kalman track dump, one row per (run, mode, t, object, axis)
TRACK_COLUMNS = [
    "run", "mode", "t", "object", "axis",
    "p", "v", "sigma_pp", "sigma_pv", "sigma_vv", "p_obs", "bound",
]

SUMMARY_COLUMNS = [
    "mode", "runs", "frames",
    "nmse_s", "nmse_l", "nmse_o",
    "mean_misses_pred", "mean_extras_pred", "mean_misses_upd", "mean_extras_upd",
    "final_alignment_added", "final_alignment_decayed",
    "failed_frames", "failed_runs",
]


def _ratio(num: float, den: float) -> float:
    return float(num / den) if den > 0 else 0.0


def _frame(rows: Iterable[Dict[str, object]], columns: List[str]) -> pd.DataFrame:
    rows = list(rows)
    return pd.DataFrame(rows, columns=columns) if rows else pd.DataFrame(columns=columns)


def _concat(left: pd.DataFrame, right: pd.DataFrame, columns: List[str], keys: List[str]) -> pd.DataFrame:
    parts = [df for df in (left, right) if not df.empty]
    if not parts:
        return pd.DataFrame(columns=columns)
    merged = pd.concat(parts, ignore_index=True)
    return merged.sort_values(keys, kind="mergesort").reset_index(drop=True)


@dataclass
class MetricsReport:
    """
    Per-frame metric rows, optional track rows and run-level failure records.
    Reports merge associatively: concatenation followed by a stable sort on (run, mode, t).
    """
    frames: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=FRAME_COLUMNS))
    failed_runs: List[Dict[str, object]] = field(default_factory=list)
    tracks: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=TRACK_COLUMNS))

    @classmethod
    def from_rows(
        cls,
        rows: Iterable[Dict[str, object]],
        failed_runs: Optional[List[Dict[str, object]]] = None,
        track_rows: Optional[Iterable[Dict[str, object]]] = None
    ) -> "MetricsReport":
        return cls(
            frames=_frame(rows, FRAME_COLUMNS),
            failed_runs=list(failed_runs or []),
            tracks=_frame(track_rows or [], TRACK_COLUMNS),
        )

    def merge(self, other: "MetricsReport") -> "MetricsReport":
        """Merges two reports; the result is independent of merge order."""
        failed = sorted(self.failed_runs + other.failed_runs, key=lambda r: (r.get("run", 0), str(r.get("mode", ""))))
        return MetricsReport(
            frames=_concat(self.frames, other.frames, FRAME_COLUMNS, ["run", "mode", "t"]),
            failed_runs=failed,
            tracks=_concat(self.tracks, other.tracks, TRACK_COLUMNS, ["run", "mode", "t", "object", "axis"]),
        )

    @property
    def modes(self) -> List[str]:
        if self.frames.empty:
            return []
        return sorted(self.frames["mode"].unique().tolist())

    def summary(self) -> pd.DataFrame:
        """
        Aggregates over runs and frames per mode.
        NMSE values are ratios of summed squared errors, E||X - X_hat||^2 / E||X||^2.
        """
        records = []
        for mode in self.modes:
            df = self.frames[self.frames["mode"] == mode]
            last_t = df["t"].max()
            final = df[df["t"] == last_t]
            records.append({
                "mode": mode,
                "runs": int(df["run"].nunique()),
                "frames": int(len(df)),
                "nmse_s": _ratio(df["err_s"].sum(), df["norm_s"].sum()),
                "nmse_l": _ratio(df["err_l"].sum(), df["norm_l"].sum()),
                "nmse_o": _ratio(df["err_o"].sum(), df["norm_o"].sum()),
                "mean_misses_pred": float(df["misses_pred"].mean()),
                "mean_extras_pred": float(df["extras_pred"].mean()),
                "mean_misses_upd": float(df["misses_upd"].mean()),
                "mean_extras_upd": float(df["extras_upd"].mean()),
                "final_alignment_added": float(final["alignment_added"].mean()),
                "final_alignment_decayed": float(final["alignment_decayed"].mean()),
                "failed_frames": int(df["failed"].astype(bool).sum()),
                "failed_runs": sum(1 for r in self.failed_runs if r.get("mode") in (mode, None)),
            })
        return pd.DataFrame(records, columns=SUMMARY_COLUMNS)

    def summary_for(self, mode: str) -> Dict[str, float]:
        table = self.summary()
        row = table[table["mode"] == mode]
        if row.empty:
            raise KeyError(mode)
        return row.iloc[0].to_dict()

    def mean_curve(self, column: str, mode: str) -> pd.Series:
        """Per-frame mean of a column across runs (plot data)."""
        df = self.frames[self.frames["mode"] == mode]
        return df.groupby("t")[column].mean()

    def per_frame_nmse(self, column: str, mode: str) -> np.ndarray:
        """Per-frame NMSE averaged over runs as E||err||^2 / E||x||^2."""
        df = self.frames[self.frames["mode"] == mode]
        grouped = df.groupby("t")[[f"err_{column}", f"norm_{column}"]].sum()
        den = grouped[f"norm_{column}"].to_numpy(dtype=float)
        num = grouped[f"err_{column}"].to_numpy(dtype=float)
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0)
