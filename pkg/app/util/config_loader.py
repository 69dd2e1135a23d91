from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml
from click.core import ParameterSource
from pydantic import ValidationError

from app.model.errors import ConfigError
from app.model.experiment_config import Command, ExperimentConfig

EXPLICIT_SOURCES = (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """Reads a YAML mapping of experiment parameters; no path means no values."""
    if path is None:
        return {}
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}")
    with open(config_path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"config file {config_path} is not valid YAML: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {config_path} must hold a mapping, got {type(data).__name__}")
    return {str(key).replace("-", "_"): value for key, value in data.items()}


def merge_config(
    command: Command,
    flag_values: Mapping[str, Any],
    explicit: Mapping[str, bool],
    file_values: Mapping[str, Any],
) -> ExperimentConfig:
    """
    Builds the ExperimentConfig of one run. An explicit flag wins over the
    config file, the file wins over the flag's default, and parameters nobody
    set fall back to the command's defaults.

    Args:
        command: command being run
        flag_values: values of the experiment flags (None when unset)
        explicit: per flag, whether the user set it on the command line or
            through the environment
        file_values: parameters read by load_config_file

    Returns:
        validated ExperimentConfig
    """
    values: Dict[str, Any] = dict(file_values)
    for name, value in flag_values.items():
        if value is None:
            continue
        if explicit.get(name, False) or name not in values:
            values[name] = value
    values.pop("command", None)
    try:
        return ExperimentConfig.for_command(command, **values)
    except ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(part) for part in error['loc']) or 'config'}: {error['msg']}" for error in e.errors()
        )
        raise ConfigError(f"invalid {Command(command).value} parameters: {details}") from e


def explicit_parameters(ctx, names) -> Dict[str, bool]:
    return {name: ctx.get_parameter_source(name) in EXPLICIT_SOURCES for name in names}
