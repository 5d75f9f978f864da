"""Pairing ablation: overlapping pairs with cross-pair fusion against disjoint pairs and single frames."""

from typing import Optional

import typer

from ..cli.common import ConfigFile, handle_errors
from ..formats.fixtures import FixtureKind
from ..helper.config import Pairing, PipelineConfig
from ..pipeline.anchors import ConsistencyTrace
from ..pipeline.video import FrameSource, edit_anchor_frames
from .base import (ExperimentConfig, FixtureOption, FramesOption, InputOption, OutputOption, SweepOption,
                   anchor_measurements, run_experiment)

__all__ = ['FusionExperiment', 'run_cmd']


class FusionExperiment(ExperimentConfig):
    """Pairing ablation: overlapping pairs with cross-pair fusion against disjoint pairs and single frames."""
    default_grid = {"pairing": [str(p) for p in Pairing]}

    def __init__(self, base_config: PipelineConfig, grid: Optional[dict[str, list]] = None):
        super().__init__("fusion", self.__doc__, base_config, grid, pretty_name="Cross-pair Fusion Ablation")

    def measure(self, frames: FrameSource, config: PipelineConfig) -> dict[str, float]:
        trace = ConsistencyTrace()
        _, originals, edited = edit_anchor_frames(frames, config, trace=trace)
        return {**anchor_measurements(originals, edited), "fusion_non_increasing": trace.non_increasing_fraction()}


@handle_errors
def run_cmd(ctx: typer.Context, output: OutputOption, input: InputOption = None,
            fixture: FixtureOption = FixtureKind.MIXING, frames: FramesOption = 49, sweep: SweepOption = None,
            config_file: ConfigFile = None):
    """Run the pairing ablation and tabulate anchor coherence per pairing."""
    run_experiment(FusionExperiment, ctx, input, fixture, frames, sweep, output, config_file)
