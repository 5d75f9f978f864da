"""
Shared machinery for the ablation experiments: an experiment expands a grid of configuration values
into variants, runs the anchor stage once per variant and tabulates the measurements.
"""

from abc import ABC
from importlib.util import find_spec
from itertools import product
from pathlib import Path
from typing import Annotated, Iterator, Optional

import numpy as np
import rich
import typer

from ..formats.fixtures import FixtureKind, make_fixture
from ..formats.frames import load_frames
from ..helper.config import PipelineConfig, parse_flag_overrides, resolve_config, write_config_echo
from ..helper.utilities import LazyImporter, run_once
from ..metrics.embedders import ToyEmbedder
from ..metrics.suite import sim_adjacent
from ..pipeline.video import FrameSource, edit_anchor_frames
from .sweep import load_sweep_specification

__all__ = ['ExperimentConfig', 'anchor_measurements', 'check_imports', 'run_experiment']


@run_once
def check_imports():
    missing = []
    for module in ['pandas', 'yaml']:
        if find_spec(module) is None:
            missing.append(module)
    if missing:
        raise ModuleNotFoundError(
            f"Missing required modules for experiments: {', '.join(missing)}. "
            "Please install the 'anchor-edit[experiments]' extra to use this feature."
        )


check_imports()

pd = LazyImporter('pandas')

console = rich.get_console()
print = console.print


def anchor_measurements(originals: np.ndarray, edited: np.ndarray) -> dict[str, float]:
    """
    Edit strength (global appearance shift), distance to the original anchors, adjacent-anchor
    coherence and mean embedding distance between consecutive anchors.
    """
    frames = list(np.clip(edited, 0.0, 1.0))
    embedder = ToyEmbedder()
    e = embedder.embed_all(frames)
    return {
        "edit_strength": 100.0 * abs(float(edited.mean() - originals.mean())),
        "distance_to_originals": 100.0 * float(np.mean(np.abs(edited - originals))),
        "anchor_coherence": sim_adjacent(frames, embedder),
        "inter_anchor_distance": float(np.mean(np.linalg.norm(e[1:] - e[:-1], axis=1))),
    }


class ExperimentConfig(ABC):
    _name: str
    _description: str
    _base_config: PipelineConfig
    default_grid: dict[str, list] = {}

    def __init__(self, name: str, description: Optional[str], base_config: PipelineConfig,
                 grid: Optional[dict[str, list]] = None, pretty_name: Optional[str] = None):
        self._name = name
        self._pretty_name = pretty_name if pretty_name is not None else name
        self._description = description or ''
        self._base_config = base_config
        self.grid = dict(grid) if grid else dict(self.default_grid)

    @property
    def name(self) -> str:
        return self._name

    @property
    def pretty_name(self) -> str:
        return self._pretty_name

    @property
    def description(self) -> str:
        return self._description

    @property
    def base_config(self) -> PipelineConfig:
        return self._base_config

    @property
    def variants(self) -> list[dict[str, str]]:
        keys = list(self.grid)
        return [dict(zip(keys, (f"{v}" for v in values))) for values in product(*self.grid.values())]

    def configs(self) -> Iterator[tuple[dict[str, str], PipelineConfig]]:
        for variant in self.variants:
            yield variant, PipelineConfig.from_strings(variant, self.base_config)

    def measure(self, frames: FrameSource, config: PipelineConfig) -> dict[str, float]:
        _, originals, edited = edit_anchor_frames(frames, config)
        return anchor_measurements(originals, edited)

    def run(self, frames: FrameSource) -> "pd.DataFrame":
        rows = []
        for variant, config in self.configs():
            rows.append({**variant, **self.measure(frames, config)})
            print(f"[info]{self.name}: {variant} done[/info]")
        return pd.DataFrame(rows)

    def write_results(self, table: "pd.DataFrame", output_dir: Path) -> Path:
        """Write the result table as CSV, with the base configuration echoed next to it."""
        output_dir.mkdir(parents=True, exist_ok=True)
        path = output_dir / f'{self.name}.csv'
        table.to_csv(path, index=False)
        write_config_echo(self.base_config, output_dir)
        return path

    def __str__(self) -> str:
        output = '\n'.join([
            f'[h1]{self.pretty_name}[/]',
            f'{self.description}',
            "\n[h2]Grid[/]",
        ])
        output += "\n" + "\n".join(f"  • {key}: {', '.join(str(v) for v in values)}" for key, values in self.grid.items())
        return output


InputOption = Annotated[Optional[Path], typer.Option('--input', '-i', help="Frame directory; a fixture otherwise")]
FixtureOption = Annotated[FixtureKind, typer.Option('--fixture', help="Fixture used without --input")]
FramesOption = Annotated[int, typer.Option('--frames', min=2, help="Fixture length")]
SweepOption = Annotated[Optional[Path], typer.Option('--sweep', help="YAML sweep specification replacing the default grid")]
OutputOption = Annotated[Path, typer.Option('--output', '-o', help="Directory for the CSV table")]


def run_experiment(experiment_type: type[ExperimentConfig], ctx: typer.Context, input: Optional[Path],
                   fixture: FixtureKind, frames: int, sweep: Optional[Path], output: Path,
                   config_file: Optional[Path]) -> Path:
    base = resolve_config(config_file, parse_flag_overrides(list(ctx.args)))
    grid = load_sweep_specification(sweep) if sweep is not None else None
    experiment = experiment_type(base, grid)
    print(experiment)
    video = load_frames(input) if input is not None else make_fixture(fixture, frames, base.height, base.width)
    table = experiment.run(video)
    path = experiment.write_results(table, output)
    print(table.to_string(index=False))
    print(f"[success]Results written to {path}[/success]")
    return path
