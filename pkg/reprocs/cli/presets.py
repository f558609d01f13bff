"""
Named experiment presets.

Each preset is a plain configuration mapping in the experiment-file layout, so a preset
can be dumped, edited and fed back through --config. Desk-scale values are the default;
full_scale restores the published problem sizes and Monte-Carlo counts.

Version: 1.0
"""

# External imports with versions
import copy  # built-in
import math  # built-in
from typing import Any, Callable, Dict, List, Optional  # built-in

# Internal imports
from reprocs.core.config import build_config
from reprocs.core.exceptions import ConfigurationException
from reprocs.schemas.experiment import ExperimentConfig, ExperimentPreset

PresetBuilder = Callable[[bool], Dict[str, Any]]

# new-direction variances of the 32 x 32 runs; smaller frames scale them by n / 1024 so
# each entry sees the same perturbation
PUBLISHED_FRAME_SIZE = 1024
NEW_DIRECTION_VARIANCES = ((50.0, 60.0), (55.0, 65.0))


def ladder_ratio(start: float, end: float, count: int) -> float:
    """Ratio of a geometric ladder running from start to end in count steps."""
    return (end / start) ** (1.0 / (count - 1))


def strip_objects(
    count: int,
    magnitude: float,
    half_height: int = 4,
    rows: Optional[int] = None
) -> List[Dict[str, Any]]:
    """
    `count` vertical strips of 2 * half_height + 1 cells. Start positions are random, or
    evenly spaced over `rows` cells so the strips start disjoint.
    """
    objects: List[Dict[str, Any]] = [{"half_size": [half_height, 0], "magnitude": magnitude} for _ in range(count)]
    if rows is not None:
        spacing = rows // count
        for k, obj in enumerate(objects):
            obj["position"] = [k * spacing + spacing // 2, 0]
    return objects


def _schedule(t0: int, base: int, events: List[Dict[str, List[int]]]) -> List[Dict[str, Any]]:
    """Events at t0 + 5 and t0 + 50; new directions follow the ladder at index base."""
    times = (t0 + 5, t0 + 50)
    schedule, next_index = [], base
    for time, event in zip(times, events):
        add = list(range(next_index, next_index + len(event["variances"])))
        next_index += len(add)
        schedule.append({"time": time, "add": add, "decay": event["decay"]})
    return schedule


def _table1(name: str, magnitude: float, fraction: float, strips: int = 1) -> PresetBuilder:
    def build(full_scale: bool) -> Dict[str, Any]:
        n, t0 = 100, 2000
        return {
            "name": name,
            "t0": t0,
            "horizon": 100,
            "mc_runs": 100 if full_scale else 10,
            "modes": ["reprocs"],
            "generator": {
                "n": n,
                "ladder": {"start": 1e4, "ratio": 0.7079, "count": 20},
                "extra_variances": [50.0, 60.0],
                "f": 0.5, "f_d": 0.1, "theta": 0.5,
                "schedule": _schedule(t0, 20, [{"variances": [50.0, 60.0], "decay": [18, 19]}]),
            },
            "support": {
                "kind": "strips",
                "frame_shape": [n, 1],
                "objects": strip_objects(strips, magnitude, rows=n if strips > 1 else None),
                "p_static": 0.8,
                "p_move": 0.1,
            },
            "pipeline": {
                "mode": "reprocs",
                "gamma_fraction": fraction,
                "subspace": {"tau": 20, "alpha": 5.0},
            },
        }
    return build


def _table2(kind: str) -> PresetBuilder:
    def build(full_scale: bool) -> Dict[str, Any]:
        side = 32 if full_scale else 16
        t0 = 2000 if full_scale else 500
        first, second = ([v * side * side / PUBLISHED_FRAME_SIZE for v in pair] for pair in NEW_DIRECTION_VARIANCES)
        if kind == "uniform":
            support = {"kind": "uniform", "frame_shape": [side, side], "size": 49, "magnitude": 5.0}
        else:
            support = {
                "kind": "blocks2d",
                "frame_shape": [side, side],
                "objects": [{"half_size": [3, 3], "magnitude": 5.0}],
                "p_static": 0.8,
                "p_move": 0.05,
            }
        return {
            "name": "table2_random" if kind == "uniform" else "table2_correlated",
            "t0": t0,
            "horizon": 200,
            "mc_runs": 100 if full_scale else 10,
            "modes": ["reprocs"],
            "generator": {
                "n": side * side,
                "ladder": {"start": 1e4, "ratio": 0.8058, "count": 32},
                "extra_variances": first + second,
                "f": 0.5, "f_d": 0.1, "theta": 0.5,
                "schedule": _schedule(t0, 32, [
                    {"variances": first, "decay": [30, 31]},
                    {"variances": second, "decay": [28, 29]},
                ]),
            },
            "support": support,
            "pipeline": {
                "mode": "reprocs",
                "gamma": 1.0,
                "subspace": {"tau": 20, "alpha": 5.0},
            },
        }
    return build


def _twoblocks(full_scale: bool) -> Dict[str, Any]:
    if full_scale:
        rows, cols, half = 64, 80, (22, 14)
        centers = [(32.0, 14.0), (32.0, 65.0)]
        count, t0, mc_runs = 1024, 5000, 100
        speed = 0.25
    else:
        rows, cols, half = 32, 40, (7, 10)
        centers = [(7.0, 12.0), (24.0, 27.0)]
        count, t0, mc_runs = 256, 600, 5
        # centers keep to columns 10..29 over the horizon
        speed = 0.08
    Q = 2.5e-5
    objects = [
        {"half_size": list(half), "position": list(centers[0]), "magnitude": 10.0, "velocity": [0.0, speed]},
        {"half_size": list(half), "position": list(centers[1]), "magnitude": 20.0, "velocity": [0.0, -speed]},
    ]
    tracks = [
        {"Q": Q, "R": 4 * Q, "half_width": list(half), "intensity_range": [5.0, 15.0], "observe_mode": "median"},
        {"Q": Q, "R": 4 * Q, "half_width": list(half), "intensity_range": [15.0, 25.0], "observe_mode": "median"},
    ]
    return {
        "name": "twoblocks_modcs",
        "t0": t0,
        "horizon": 100,
        "mc_runs": mc_runs,
        "modes": ["reprocs", "reprocs_modcs"],
        "generator": {
            "n": rows * cols,
            "ladder": {"start": 1e4, "ratio": ladder_ratio(1e4, 10.0, count), "count": count},
            "extra_variances": [50.0, 55.0],
            "f": 0.5, "f_d": 0.1, "theta": 0.5,
            "schedule": _schedule(t0, count, [{"variances": [50.0, 55.0], "decay": [count - 2, count - 1]}]),
        },
        "support": {
            "kind": "constant_velocity",
            "frame_shape": [rows, cols],
            "objects": objects,
            "accel_var": Q,
            "accel_axes": [False, True],
        },
        "pipeline": {
            "mode": "reprocs_modcs",
            "gamma": 1.0,
            "alpha_del": 1.0,
            "alpha_add": 0.5,
            "subspace": {"tau": 20, "alpha": 5.0},
            "tracks": tracks,
            "track_init": "truth",
        },
    }


def _overlay(full_scale: bool) -> Dict[str, Any]:
    if full_scale:
        rows, cols, half, t0, horizon, mc_runs = 72, 90, (22, 12), 1420, 80, 100
    else:
        rows, cols, half, t0, horizon, mc_runs = 24, 30, (7, 4), 400, 80, 5
    n = rows * cols
    count = max(2, int(0.2 * n))
    Q = 0.005
    return {
        "name": "overlay_realbg",
        "t0": t0,
        "horizon": horizon,
        "mc_runs": mc_runs,
        "modes": ["reprocs", "reprocs_modcs"],
        "compose_mode": "overlay",
        "generator": {
            "n": n,
            "ladder": {"start": 1e4, "ratio": ladder_ratio(1e4, 10.0, count), "count": count},
            "f": 0.5, "f_d": 0.1, "theta": 0.5,
            "background_mean": 100.0,
        },
        "support": {
            "kind": "constant_velocity",
            "frame_shape": [rows, cols],
            "objects": [{
                "half_size": list(half),
                "position": [rows // 2, half[1]],
                "magnitude": 200.0,
                "velocity": [0.0, 0.5],
            }],
            "accel_var": Q,
            "accel_axes": [False, True],
        },
        "pipeline": {
            "mode": "reprocs_modcs",
            "gamma": 10.0,
            "alpha_del": 20.0,
            "alpha_add": 10.0,
            "subspace": {"tau": 10, "alpha": 0.1, "subtract_mean": True},
            "tracks": [{"Q": Q, "R": 1e-4, "half_width": list(half), "observe_mode": "median"}],
            "track_init": "truth",
        },
    }


PRESETS: Dict[str, PresetBuilder] = {
    "table1_large": _table1("table1_large", 100.0, 0.2),
    "table1_small": _table1("table1_small", 10.0, 0.3),
    "table1_large_36": _table1("table1_large_36", 100.0, 0.2, strips=4),
    "table1_small_36": _table1("table1_small_36", 10.0, 0.3, strips=4),
    "table2_random": _table2("uniform"),
    "table2_correlated": _table2("blocks2d"),
    "twoblocks_modcs": _twoblocks,
    "overlay_realbg": _overlay,
}


def _resize(data: Dict[str, Any], n: int) -> None:
    """Changes the frame size of the table presets, keeping the object geometry."""
    support = data["support"]
    rows, cols = support["frame_shape"]
    if cols == 1:
        support["frame_shape"] = [n, 1]
        objects = support["objects"]
        if objects and "position" in objects[0]:
            spaced = strip_objects(len(objects), objects[0]["magnitude"], objects[0]["half_size"][0], rows=n)
            for obj, fresh in zip(objects, spaced):
                obj["position"] = fresh["position"]
    else:
        side = math.isqrt(n)
        if side * side != n:
            raise ConfigurationException(
                f"Preset '{data['name']}' uses square frames; n={n} is not a perfect square",
                details={"key": "n", "n": n}
            )
        support["frame_shape"] = [side, side]
        generator = data["generator"]
        generator["extra_variances"] = [v * n / (rows * cols) for v in generator["extra_variances"]]
    data["generator"]["n"] = n


def preset_config(preset: ExperimentPreset) -> Dict[str, Any]:
    """
    Configuration mapping of a preset with its scaled overrides applied.

    Raises:
        ConfigurationException: If an override is not supported by the preset
    """
    data = copy.deepcopy(PRESETS[preset.name](preset.full_scale))
    if preset.n is not None:
        if not preset.name.startswith(("table1", "table2")):
            raise ConfigurationException(
                f"Preset '{preset.name}' has a fixed frame geometry; n cannot be overridden",
                details={"key": "n"}
            )
        _resize(data, preset.n)
    if preset.t0 is not None:
        shift = preset.t0 - data["t0"]
        data["t0"] = preset.t0
        for event in data["generator"].get("schedule", []):
            event["time"] += shift
    for key in ("horizon", "mc_runs"):
        value = getattr(preset, key)
        if value is not None:
            data[key] = value
    return data


def load_preset(
    name: str,
    full_scale: bool = False,
    n: Optional[int] = None,
    t0: Optional[int] = None,
    horizon: Optional[int] = None,
    mc_runs: Optional[int] = None
) -> ExperimentConfig:
    """Validated ExperimentConfig of a named preset."""
    try:
        preset = ExperimentPreset(name=name, n=n, t0=t0, horizon=horizon, mc_runs=mc_runs, full_scale=full_scale)
    except ValueError as e:
        raise ConfigurationException(str(e), details={"key": "preset"})
    return build_config(preset_config(preset))
