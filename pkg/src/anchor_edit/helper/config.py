import typer
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Callable, Optional

from rich import print
from rich.table import Table

from ..diffusion.conditions import GuidanceConfig
from ..diffusion.schedule import NoiseSchedule, make_linear_schedule
from ..errors import ConfigError
from ..vision.canny import CannyParams
from ..vision.flow import FlowParams
from .utilities import LazyImporter

difflib = LazyImporter('difflib')

__all__ = ['ConfigKey', 'CheckBounded', 'PipelineConfig', 'DenoiserKind', 'Pairing', 'InterpMode',
           'CONFIG_KEYS', 'FLAG_ALIASES', 'known_key', 'read_config_file', 'parse_flag_overrides', 'resolve_config',
           'write_config_echo', 'app']

CONFIG_ECHO = "config.txt"


class DenoiserKind(Enum):
    PAIRNET = 'pairnet'
    ANALYTIC = 'analytic'

    def __str__(self):
        return self.value


class Pairing(Enum):
    FUSED = 'fused'
    DISJOINT = 'disjoint'
    FRAMEWISE = 'framewise'

    def __str__(self):
        return self.value


class InterpMode(Enum):
    BIDIRECTIONAL = 'bidirectional'
    FORWARD = 'forward'
    REVERSE = 'reverse'

    def __str__(self):
        return self.value


@dataclass
class ConfigKey:
    name: str
    description: str
    type: type
    check: Callable[[Any], bool] = lambda _: True

    def __eq__(self, key):
        if isinstance(key, ConfigKey):
            return self.name == key.name
        return self.name == key

    def __hash__(self):
        return hash(self.name)

    def __str__(self):
        return self.name

    def parse(self, value: Any) -> Any:
        try:
            parsed = self.type(value)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"Invalid value {value!r} for key {self.name}: {err}") from err
        if not self.check(parsed):
            raise ConfigError(f"Invalid value {parsed!r} for key {self.name}: {self.check}")
        return parsed


class CheckBounded():
    def __init__(self, lower=None, upper=None, inclusive_lower=False, inclusive_upper=False):
        assert lower is not None or upper is not None, "One of upper or lower bounds must be set"
        self.lower = lower
        self.upper = upper
        self.inclusive_lower = inclusive_lower
        self.inclusive_upper = inclusive_upper

    def __str__(self) -> str:
        if self.lower is None:
            return f"must be <{('=' if self.inclusive_upper else '')} {self.upper}"
        if self.upper is None:
            return f"must be >{('=' if self.inclusive_lower else '')} {self.lower}"
        bracket_lower = "[" if self.inclusive_lower else "("
        bracket_upper = "]" if self.inclusive_upper else ")"
        return f"must be in the interval {bracket_lower}{self.lower}, {self.upper}{bracket_upper}"

    def __call__(self, value) -> bool:
        good = value is not None
        if good and self.lower is not None:
            good = good and (value > self.lower or (self.inclusive_lower and value == self.lower))
        if good and self.upper is not None:
            good = good and (value < self.upper or (self.inclusive_upper and value == self.upper))
        return good


def _at_least(lower):
    return CheckBounded(lower, inclusive_lower=True)


def _unit_interval():
    return CheckBounded(0, 1, inclusive_lower=True, inclusive_upper=True)


CONFIG_KEYS = {key.name: key for key in [
    ConfigKey('K', 'Anchor interval in frames', int, _at_least(1)),
    ConfigKey('num_steps', 'Number of DDIM steps', int, _at_least(2)),
    ConfigKey('beta_start', 'First beta of the linear schedule', float, CheckBounded(0, 1)),
    ConfigKey('beta_end', 'Last beta of the linear schedule', float, CheckBounded(0, 1)),
    ConfigKey('s_T', 'Text guidance scale', float, _at_least(0)),
    ConfigKey('s_J', 'Joint structural guidance scale', float, _at_least(0)),
    ConfigKey('attn_ratio', 'Fraction of steps with attention feature injection', float, _unit_interval()),
    ConfigKey('conv_ratio', 'Fraction of steps with conv feature injection', float, _unit_interval()),
    ConfigKey('control_strength', 'Scale of edge/flow control residuals', float, _at_least(0)),
    ConfigKey('canny_sigma', 'Canny Gaussian sigma', float, CheckBounded(0)),
    ConfigKey('canny_low', 'Canny low threshold', float, CheckBounded(0, 1)),
    ConfigKey('canny_high', 'Canny high threshold', float, CheckBounded(0, 1)),
    ConfigKey('flow_lambda', 'Horn-Schunck smoothness weight', float, CheckBounded(0)),
    ConfigKey('flow_iters', 'Horn-Schunck iterations', int, _at_least(1)),
    ConfigKey('width', 'Frame width for generated fixtures', int, _at_least(1)),
    ConfigKey('height', 'Frame height for generated fixtures', int, _at_least(1)),
    ConfigKey('inversion_iters', 'Fixed-point refinements per inversion step', int, _at_least(0)),
    ConfigKey('denoiser', 'Noise predictor backend', DenoiserKind),
    ConfigKey('hidden', 'Pair network token dimension', int, _at_least(1)),
    ConfigKey('patch', 'Pair network token patch size', int, _at_least(1)),
    ConfigKey('text_dim', 'Condition vector dimension', int, _at_least(1)),
    ConfigKey('prior_variance', 'Per-frame prior variance of the analytic backend', float, CheckBounded(0)),
    ConfigKey('pairing', 'Anchor pairing scheme', Pairing),
    ConfigKey('interp_mode', 'Interpolation branches', InterpMode),
    ConfigKey('inv_prompt', 'Prompt describing the source video (empty = null condition)', str),
    ConfigKey('edit_prompt', 'Editing prompt (empty = null condition)', str),
    ConfigKey('weights_seed', 'Seed of the pair network and control encoder weights', int, _at_least(0)),
    ConfigKey('noise_seed', 'Seed of the shared interpolation noise', int, _at_least(0)),
    ConfigKey('threads', 'Worker threads', int, _at_least(1)),
]}

FLAG_ALIASES = {'k': 'K', 'steps': 'num_steps', 's_t': 's_T', 's_j': 's_J'}


@dataclass(frozen=True)
class PipelineConfig:
    K: int = 24
    num_steps: int = 50
    beta_start: float = 1e-4
    beta_end: float = 0.02
    s_T: float = 6.0
    s_J: float = 0.8
    attn_ratio: float = 0.44
    conv_ratio: float = 0.65
    control_strength: float = 1.0
    canny_sigma: float = 1.4
    canny_low: float = 0.1
    canny_high: float = 0.3
    flow_lambda: float = 0.1
    flow_iters: int = 100
    width: int = 64
    height: int = 64
    inversion_iters: int = 3
    denoiser: DenoiserKind = DenoiserKind.PAIRNET
    hidden: int = 8
    patch: int = 8
    text_dim: int = 8
    prior_variance: float = 1e-4
    pairing: Pairing = Pairing.FUSED
    interp_mode: InterpMode = InterpMode.BIDIRECTIONAL
    inv_prompt: str = ''
    edit_prompt: str = ''
    weights_seed: int = 0
    noise_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, CONFIG_KEYS[f.name].parse(getattr(self, f.name)))
        if self.beta_start > self.beta_end:
            raise ConfigError(f"beta_start ({self.beta_start}) must not exceed beta_end ({self.beta_end})")
        if self.canny_low >= self.canny_high:
            raise ConfigError(f"canny_low ({self.canny_low}) must be below canny_high ({self.canny_high})")

    @classmethod
    def from_strings(cls, values: dict[str, str], base: Optional["PipelineConfig"] = None) -> "PipelineConfig":
        base = base if base is not None else cls()
        parsed = {}
        for name, value in values.items():
            parsed[name] = known_key(name).parse(value)
        return replace(base, **parsed)

    def to_text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))

    def schedule(self) -> NoiseSchedule:
        return make_linear_schedule(self.num_steps, self.beta_start, self.beta_end)

    def guidance(self) -> GuidanceConfig:
        return GuidanceConfig(self.s_T, self.s_J)

    def canny_params(self) -> CannyParams:
        return CannyParams(self.canny_sigma, self.canny_low, self.canny_high)

    def flow_params(self) -> FlowParams:
        return FlowParams(self.flow_lambda, self.flow_iters)


def known_key(name: str) -> ConfigKey:
    if name not in CONFIG_KEYS:
        similar = difflib.get_close_matches(name, CONFIG_KEYS.keys())
        hint = f" (similar keys: {', '.join(similar)})" if similar else ""
        raise ConfigError(f"Unknown configuration key: {name}{hint}")
    return CONFIG_KEYS[name]


def read_config_file(path: Path) -> dict[str, str]:
    """Read key=value lines; '#' starts a comment."""
    values = {}
    for number, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep:
            raise ConfigError(f"{path}:{number}: expected key=value, got '{line}'")
        values[key.strip()] = value.strip()
    return values


def parse_flag_overrides(args: list[str]) -> dict[str, str]:
    """
    Turn extra command-line arguments of the form `--key value` or `--key=value` into config overrides.
    Dashes in flag names stand for underscores.
    """
    overrides = {}
    i = 0
    while i < len(args):
        arg = args[i]
        if not arg.startswith('--'):
            raise typer.BadParameter(f"Unexpected argument '{arg}'")
        name, sep, value = arg[2:].partition('=')
        if not sep:
            if i + 1 >= len(args):
                raise typer.BadParameter(f"Missing value for flag '{arg}'")
            value = args[i + 1]
            i += 1
        i += 1
        name = name.replace('-', '_')
        name = FLAG_ALIASES.get(name, name)
        if name not in CONFIG_KEYS:
            similar = difflib.get_close_matches(name, CONFIG_KEYS.keys())
            hint = f" (did you mean --{similar[0].replace('_', '-')}?)" if similar else ""
            raise typer.BadParameter(f"Unknown flag '{arg}'{hint}")
        overrides[name] = value
    return overrides


def resolve_config(config_file: Optional[Path] = None, overrides: Optional[dict[str, str]] = None) -> PipelineConfig:
    """Defaults, then the config file, then explicit flags."""
    config = PipelineConfig()
    if config_file is not None:
        config = PipelineConfig.from_strings(read_config_file(config_file), config)
    if overrides:
        config = PipelineConfig.from_strings(overrides, config)
    return config


def write_config_echo(config: PipelineConfig, directory: Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CONFIG_ECHO
    path.write_text(config.to_text())
    return path


app = typer.Typer(help="Inspect and write pipeline configuration")


def print_config(config: PipelineConfig):
    """
    Print the configuration in a human-readable format.
    """
    table = Table("Name", "Description", "Options", "Value")
    for f in fields(config):
        config_key = CONFIG_KEYS[f.name]
        options = ", ".join(str(e) for e in config_key.type) if issubclass(config_key.type, Enum) else str(config_key.check) if isinstance(config_key.check, CheckBounded) else ""
        table.add_row(f'[bold underline]{config_key.name}', config_key.description, options, str(getattr(config, f.name)))
    print(table)


@app.command('show')
def show_cmd(config_file: Annotated[Optional[Path], typer.Option('--config', help="key=value configuration file")] = None):
    """
    Show the resolved configuration.
    """
    print_config(resolve_config(config_file))


@app.command('write')
def write_cmd(dst: Path):
    """
    Write the default configuration as key=value lines.
    """
    full_dst = dst.resolve()
    full_dst.parent.mkdir(parents=True, exist_ok=True)
    full_dst.write_text(PipelineConfig().to_text())
    print(f'[success]Wrote configuration to {full_dst}[/success]')
