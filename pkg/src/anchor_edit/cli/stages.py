"""
The pipeline stages as separate commands, exchanging latents through ANCH files and frames through
PPM directories, plus the one-shot `pipeline` command.
"""

import logging
from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import typer

from ..diffusion.pairnet import PairNetWeights
from ..errors import ContractError
from ..formats.binary import (cache_path_for, load_feature_cache, read_latents, read_weights, save_feature_cache,
                              write_latents, write_weights)
from ..formats.frames import FrameSequence, load_frames, save_frames
from ..helper.config import PipelineConfig, write_config_echo
from ..pipeline.anchors import edit_anchors, invert_anchors, sample_anchors
from ..pipeline.video import PipelineRuntime, interpolate_video, run_pipeline, stage
from .common import ConfigFile, config_from, handle_errors, print

__all__ = ['invert_cmd', 'edit_anchors_cmd', 'interpolate_cmd', 'pipeline_cmd', 'weights_cmd']

log = logging.getLogger(__name__)

InputFrames = Annotated[Path, typer.Option('--input', '-i', help="Directory of numbered PPM frames")]
WeightsFile = Annotated[Optional[Path], typer.Option('--weights', help="ASWT weight file; seeded weights otherwise")]


def _runtime(config: PipelineConfig, weights_file: Optional[Path]) -> PipelineRuntime:
    weights = read_weights(weights_file) if weights_file is not None else None
    return PipelineRuntime.from_config(config, weights)


def _anchor_frames(frames: FrameSequence, config: PipelineConfig):
    anchors = sample_anchors(len(frames), config.K)
    return anchors, np.stack([frames[i] for i in anchors.frame_indices])


@handle_errors
def invert_cmd(ctx: typer.Context,
               input: InputFrames,
               output: Annotated[Path, typer.Option('--output', '-o', help="ANCH file for the inverted anchors")],
               config_file: ConfigFile = None,
               weights_file: WeightsFile = None):
    """
    Invert the anchor frames to noise; the attention and convolution taps go to a sidecar cache.
    """
    config = config_from(ctx, config_file)
    runtime = _runtime(config, weights_file)
    frames = load_frames(input)
    with stage("anchors"):
        anchors, anchor_frames = _anchor_frames(frames, config)
        inv_cond, _ = runtime.conditions(anchor_frames)
    with stage("invert"):
        noised, cache = invert_anchors(anchor_frames, inv_cond, runtime.schedule,
                                       runtime.anchor_denoiser(anchor_frames), pairing=config.pairing,
                                       fixed_point_iters=config.inversion_iters, threads=config.threads)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_latents(output, noised)
    save_feature_cache(cache_path_for(output), cache)
    write_config_echo(config, output.parent)
    print(f"[success]Inverted {len(anchors)} anchors to {output}[/success]")


@handle_errors
def edit_anchors_cmd(ctx: typer.Context,
                     input: InputFrames,
                     latents: Annotated[Path, typer.Option('--latents', help="ANCH file written by `invert`")],
                     output: Annotated[Path, typer.Option('--output', '-o', help="ANCH file for the edited anchors")],
                     config_file: ConfigFile = None,
                     weights_file: WeightsFile = None):
    """
    Denoise inverted anchors under the editing prompt with feature injection.
    """
    config = config_from(ctx, config_file)
    runtime = _runtime(config, weights_file)
    frames = load_frames(input)
    cache = load_feature_cache(cache_path_for(latents))
    noised = read_latents(latents)
    with stage("anchors"):
        anchors, anchor_frames = _anchor_frames(frames, config)
        if len(anchors) != len(noised):
            raise ContractError(f"{latents} holds {len(noised)} latents but K={config.K} gives {len(anchors)} anchors")
        _, edit_cond = runtime.conditions(anchor_frames)
    with stage("edit"):
        edited = edit_anchors(noised, cache, edit_cond, config.guidance(), runtime.injection, runtime.schedule,
                              runtime.anchor_denoiser(anchor_frames), pairing=config.pairing,
                              threads=config.threads)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_latents(output, edited)
    write_config_echo(config, output.parent)
    print(f"[success]Edited {len(edited)} anchors to {output}[/success]")


@handle_errors
def interpolate_cmd(ctx: typer.Context,
                    input: InputFrames,
                    anchors_file: Annotated[Path, typer.Option('--anchors', help="ANCH file of edited anchors")],
                    output: Annotated[Path, typer.Option('--output', '-o', help="Output frame directory")],
                    config_file: ConfigFile = None,
                    weights_file: WeightsFile = None):
    """
    Fill every segment between consecutive edited anchors and write the full edited video.
    """
    config = config_from(ctx, config_file)
    runtime = _runtime(config, weights_file)
    frames = load_frames(input)
    edited = read_latents(anchors_file)
    anchors = sample_anchors(len(frames), config.K)
    if len(anchors) != len(edited):
        raise ContractError(f"{anchors_file} holds {len(edited)} anchors but K={config.K} gives {len(anchors)}")
    save_frames(interpolate_video(frames, anchors, edited, runtime), output)
    write_config_echo(config, output)
    print(f"[success]{len(frames)} frames written to {output}[/success]")


@handle_errors
def pipeline_cmd(ctx: typer.Context,
                 input: InputFrames,
                 output: Annotated[Path, typer.Option('--output', '-o', help="Output frame directory")],
                 config_file: ConfigFile = None,
                 weights_file: WeightsFile = None):
    """
    Run anchor inversion, editing and interpolation end to end.
    """
    config = config_from(ctx, config_file)
    weights = read_weights(weights_file) if weights_file is not None else None
    frames = load_frames(input)
    output.mkdir(parents=True, exist_ok=True)
    write_config_echo(config, output)
    save_frames(run_pipeline(frames, config, weights), output)
    print(f"[success]{len(frames)} frames written to {output}[/success]")


@handle_errors
def weights_cmd(ctx: typer.Context,
                output: Annotated[Path, typer.Option('--output', '-o', help="ASWT file to write")],
                config_file: ConfigFile = None):
    """
    Write the seeded pair-network weights selected by `weights_seed`, `hidden` and `text_dim`.
    """
    config = config_from(ctx, config_file)
    weights = PairNetWeights.seeded(config.weights_seed, hidden=config.hidden, text_dim=config.text_dim)
    write_weights(output, weights)
    write_config_echo(config, output.parent)
    print(f"[success]Weights (seed {config.weights_seed}) written to {output}[/success]")
