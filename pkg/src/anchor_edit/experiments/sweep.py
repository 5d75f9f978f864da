"""
Sweep specifications: YAML files mapping configuration keys to the values an experiment grid takes.

A value is a list, a single scalar, or a `start:end:count` range. Keys are checked against the
pipeline configuration and every value is parsed with its key's type, so a bad grid fails before the
first edit runs.
"""

import re
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Any

import rich
import typer
import yaml

from ..cli.common import handle_errors
from ..errors import ConfigError
from ..helper.config import known_key

__all__ = ['ParameterRange', 'SweepLoader', 'SweepDumper', 'load_sweep_specification',
           'write_sweep_specification', 'grid_size']

console = rich.get_console()
print = console.print

app = typer.Typer(help="Load and write sweep specifications for the ablation experiments")

RANGE_TAG = '!parameter_range'
numeric_pattern = r'[-+]?(?:(?:\d*\.\d+)|(?:\d+\.?))(?:[Ee][+-]?\d+)?'
range_pattern = re.compile(rf'^({numeric_pattern}):({numeric_pattern}):(\d+)$')


@dataclass
class ParameterRange:
    """
    Evenly spaced values from `start` to `end` inclusive.
    """
    start: float
    end: float
    count: int

    @classmethod
    def parse(cls, text: str) -> "ParameterRange":
        match = range_pattern.match(text)
        if not match:
            raise ConfigError(f"Invalid range format: {text} (expected start:end:count)")
        start, end, count = match.groups()
        return cls(float(start), float(end), int(count))

    @property
    def values(self) -> list[float]:
        if self.count < 1:
            raise ConfigError(f"Parameter range {self} holds no values")
        if self.count == 1:
            return [self.start]
        step = (self.end - self.start) / (self.count - 1)
        return [self.start + i * step for i in range(self.count)]

    def __str__(self):
        return f"{self.start}:{self.end}:{self.count}"


def _range_first(resolvers: dict) -> dict:
    # ahead of the YAML 1.1 int/float resolvers, which read 1:9:5 as a base-60 number
    resolvers = {first: list(entries) for first, entries in resolvers.items()}
    for first in "+-.0123456789":
        resolvers.setdefault(first, []).insert(0, (RANGE_TAG, range_pattern))
    return resolvers


class SweepLoader(yaml.SafeLoader):
    pass


class SweepDumper(yaml.SafeDumper):
    pass


def range_parser(loader: SweepLoader, node: yaml.Node) -> ParameterRange:
    return ParameterRange.parse(loader.construct_scalar(node))


def range_representer(dumper: SweepDumper, data: ParameterRange) -> yaml.ScalarNode:
    return dumper.represent_scalar(RANGE_TAG, str(data))


SweepLoader.yaml_implicit_resolvers = _range_first(yaml.SafeLoader.yaml_implicit_resolvers)
SweepDumper.yaml_implicit_resolvers = _range_first(yaml.SafeDumper.yaml_implicit_resolvers)
SweepLoader.add_constructor(RANGE_TAG, range_parser)
SweepDumper.add_representer(ParameterRange, range_representer)


def _typed_values(name: str, raw: Any) -> list:
    key = known_key(name)
    if isinstance(raw, ParameterRange):
        raw = raw.values
    elif isinstance(raw, (str, int, float)):
        raw = [raw]
    elif not isinstance(raw, list) or not raw:
        raise ConfigError(f"Invalid value for parameter {name}: {raw!r}")
    values = []
    for value in raw:
        if key.type is int and isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"Parameter {name} takes integers, the sweep gives {value}")
            value = int(value)
        values.append(key.parse(value))
    return values


def load_sweep_specification(path: Path, quiet: bool = True) -> dict[str, list]:
    """Configuration key -> typed values of the grid axis, in file order."""
    with open(path, 'r') as file:
        try:
            data = yaml.load(file, Loader=SweepLoader)
        except yaml.YAMLError as err:
            raise ConfigError(f"Sweep specification {path} is not valid YAML: {err}") from err
    if not isinstance(data, dict) or not data:
        raise ConfigError(f"Sweep specification {path} must map configuration keys to values")
    grid = {str(name): _typed_values(str(name), raw) for name, raw in data.items()}
    if not quiet:
        print(f"Loaded sweep specification from {path} ({grid_size(grid)} variants):")
        for name, values in grid.items():
            print(f"  {name}: {', '.join(str(v) for v in values)}")
    return grid


def grid_size(grid: dict[str, list]) -> int:
    return len(list(product(*grid.values())))


def write_sweep_specification(path: Path, parameters: list[str]) -> dict[str, Any]:
    """
    Write alternating `key values` arguments to a sweep file; values are a start:end:count range or a
    comma-separated list. Keys and values are validated as the loader would.
    """
    if len(parameters) % 2:
        raise ConfigError(f"Expected alternating keys and values, got {len(parameters)} arguments")
    spec: dict[str, Any] = {}
    for name, text in zip(parameters[::2], parameters[1::2]):
        spec[name] = ParameterRange.parse(text) if range_pattern.match(text) else text.split(',')
        _typed_values(name, spec[name])
    with open(path, 'w') as file:
        yaml.dump(spec, file, Dumper=SweepDumper, sort_keys=False)
    return spec


@app.command('load')
@handle_errors
def load_cmd(path: Path):
    """
    Print the values a sweep specification expands to.
    """
    load_sweep_specification(path, quiet=False)


@app.command('write')
@handle_errors
def write_cmd(path: Path, parameters: list[str]):
    """
    Write a sweep specification, e.g. `write sweep.yaml s_T 1:9:5 pairing fused,disjoint`.
    """
    write_sweep_specification(path, parameters)
    print(f'[success]Wrote sweep specification to {path}[/success]')
