"""
Experiment configuration loading.
Parses TOML experiment files, applies dotted-key overrides and validates the result
into an ExperimentConfig, reporting the offending key on failure.

Version: 1.0
"""

# External imports with version specifications
try:
    import tomllib  # built-in (Python 3.11+)
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # tomli v2+
from pathlib import Path  # built-in
from typing import Any, Dict, Iterable, List, Tuple, Union  # built-in

from pydantic import ValidationError  # pydantic v1.10+

# Internal imports
from reprocs.core.exceptions import ConfigurationException
from reprocs.schemas.experiment import ExperimentConfig


def parse_override(text: str) -> Tuple[List[str], Any]:
    """
    Parses a `section.key=value` override. Values use TOML syntax; bare words are strings.

    Args:
        text: Override expression

    Returns:
        Tuple of the dotted key path and the parsed value

    Raises:
        ConfigurationException: If the expression has no '=' or an empty key
    """
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigurationException(
            f"Malformed override '{text}', expected section.key=value",
            details={"override": text}
        )
    try:
        value = tomllib.loads(f"value = {raw.strip()}")["value"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key.split("."), value


def apply_overrides(data: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """
    Applies overrides to a nested configuration mapping in place.
    Numeric path components index into lists, e.g. pipeline.tracks.0.R=1e-4.
    """
    for text in overrides:
        path, value = parse_override(text)
        node: Any = data
        for depth, part in enumerate(path[:-1]):
            node = _descend(node, part, ".".join(path[:depth + 1]))
        leaf = path[-1]
        if isinstance(node, list):
            node[_list_index(node, leaf, ".".join(path))] = value
        else:
            node[leaf] = value
    return data


def _descend(node: Any, part: str, dotted: str) -> Any:
    if isinstance(node, list):
        return node[_list_index(node, part, dotted)]
    if not isinstance(node, dict):
        raise ConfigurationException(f"Override path '{dotted}' does not name a section", details={"key": dotted})
    if node.get(part) is None:
        node[part] = {}
    return node[part]


def _list_index(node: List[Any], part: str, dotted: str) -> int:
    if not part.isdigit() or int(part) >= len(node):
        raise ConfigurationException(f"Override path '{dotted}' has an invalid list index", details={"key": dotted})
    return int(part)


def build_config(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Validates a configuration mapping.

    Accepts either the flat ExperimentConfig layout or a file with an [experiment] table
    holding the top-level scalars next to [generator], [support] and [pipeline] tables.

    Raises:
        ConfigurationException: Naming the first offending dotted key
    """
    data = dict(data)
    if "experiment" in data:
        header = data.pop("experiment")
        if not isinstance(header, dict):
            raise ConfigurationException("[experiment] must be a table", details={"key": "experiment"})
        data = {**data, **header}
    try:
        return ExperimentConfig.parse_obj(data)
    except ValidationError as e:
        errors = e.errors()
        first = errors[0]
        key = ".".join(str(part) for part in first["loc"] if part != "__root__") or "<root>"
        raise ConfigurationException(
            f"Invalid configuration key '{key}': {first['msg']}",
            details={"key": key, "errors": errors}
        )


def load_experiment_config(
    path: Union[str, Path],
    overrides: Iterable[str] = ()
) -> ExperimentConfig:
    """
    Loads and validates an experiment TOML file.

    Args:
        path: TOML file path
        overrides: `section.key=value` expressions applied before validation

    Returns:
        ExperimentConfig: Validated configuration

    Raises:
        ConfigurationException: If the file cannot be parsed or validation fails
    """
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationException(f"Config file not found: {path}", details={"path": str(path)})
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationException(f"Config file {path} is not valid TOML: {e}", details={"path": str(path)})
    if overrides:
        # experiment-level overrides target the flattened layout
        header = data.pop("experiment", None)
        if isinstance(header, dict):
            data = {**header, **data}
        apply_overrides(data, overrides)
    return build_config(data)
