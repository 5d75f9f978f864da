import functools
import logging
from pathlib import Path
from typing import Annotated, Callable, Optional

import rich
import typer

from ..errors import (AnchorEditError, ConfigError, ContractError, FormatError, StageError,
                      UnsupportedMetricError)
from ..helper.config import PipelineConfig, parse_flag_overrides, resolve_config

__all__ = ['CONFIG_CONTEXT', 'ConfigFile', 'handle_errors', 'config_from', 'exit_code_for', 'attach_file_log']

console = rich.get_console()
print = console.print

# Commands taking configuration flags accept any `--key value` pair and validate it against the known keys.
CONFIG_CONTEXT = {"allow_extra_args": True, "ignore_unknown_options": True}

ConfigFile = Annotated[Optional[Path], typer.Option('--config', help="key=value configuration file")]


def exit_code_for(err: BaseException) -> int:
    if isinstance(err, StageError):
        return exit_code_for(err.cause)
    if isinstance(err, (ContractError, ConfigError, UnsupportedMetricError)):
        return 2
    return 1


def handle_errors(func: Callable) -> Callable:
    """Report library and I/O errors with theme markup and map them to the documented exit codes."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (AnchorEditError, OSError) as err:
            logging.getLogger(func.__module__).debug("Command failed", exc_info=err)
            print(f"[error]Error:[/error] {err}")
            raise typer.Exit(exit_code_for(err))
    return wrapper


def config_from(ctx: typer.Context, config_file: Optional[Path]) -> PipelineConfig:
    """Defaults < --config file < explicit `--key value` flags."""
    return resolve_config(config_file, parse_flag_overrides(list(ctx.args)))


def attach_file_log(name: str, path: Path):
    """Send INFO records of a dedicated logger to a plain line-oriented file."""
    handler = logging.FileHandler(path, mode="w")
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger = logging.getLogger(name)
    logger.addHandler(handler)
    logger.setLevel(logging.INFO)
    logger.propagate = False
