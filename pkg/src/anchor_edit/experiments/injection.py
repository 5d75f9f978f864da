"""Injection-ratio study over the attention and convolution injection windows."""

from typing import Optional

import typer

from ..cli.common import ConfigFile, handle_errors
from ..formats.fixtures import FixtureKind
from ..helper.config import PipelineConfig
from .base import (ExperimentConfig, FixtureOption, FramesOption, InputOption, OutputOption, SweepOption,
                   run_experiment)

__all__ = ['InjectionExperiment', 'run_cmd']


class InjectionExperiment(ExperimentConfig):
    """Injection-ratio study over the attention and convolution injection windows."""
    default_grid = {"attn_ratio": [0.0, 0.25, 0.44, 0.75], "conv_ratio": [0.0, 0.65, 1.0]}

    def __init__(self, base_config: PipelineConfig, grid: Optional[dict[str, list]] = None):
        super().__init__("injection", self.__doc__, base_config, grid, pretty_name="Feature Injection Study")


@handle_errors
def run_cmd(ctx: typer.Context, output: OutputOption, input: InputOption = None,
            fixture: FixtureOption = FixtureKind.MIXING, frames: FramesOption = 49, sweep: SweepOption = None,
            config_file: ConfigFile = None):
    """Sweep (attn_ratio, conv_ratio) and tabulate how much of the source structure survives the edit."""
    run_experiment(InjectionExperiment, ctx, input, fixture, frames, sweep, output, config_file)
