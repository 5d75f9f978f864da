"""Guidance-scale study over the text scale s_T and the structural scale s_J."""

from typing import Optional

import typer

from ..cli.common import ConfigFile, handle_errors
from ..formats.fixtures import FixtureKind
from ..helper.config import PipelineConfig
from .base import (ExperimentConfig, FixtureOption, FramesOption, InputOption, OutputOption, SweepOption,
                   run_experiment)

__all__ = ['GuidanceExperiment', 'run_cmd']


class GuidanceExperiment(ExperimentConfig):
    """Guidance-scale study over the text scale s_T and the structural scale s_J."""
    default_grid = {"s_T": [1.0, 3.0, 6.0, 9.0], "s_J": [0.0, 0.8, 1.6]}

    def __init__(self, base_config: PipelineConfig, grid: Optional[dict[str, list]] = None):
        super().__init__("guidance", self.__doc__, base_config, grid, pretty_name="Guidance Scale Study")


@handle_errors
def run_cmd(ctx: typer.Context, output: OutputOption, input: InputOption = None,
            fixture: FixtureOption = FixtureKind.MIXING, frames: FramesOption = 49, sweep: SweepOption = None,
            config_file: ConfigFile = None):
    """Sweep (s_T, s_J) and tabulate edit strength against distance to the originals."""
    run_experiment(GuidanceExperiment, ctx, input, fixture, frames, sweep, output, config_file)
