"""
Classical vision kernels on PPM files.
"""

from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import typer

from ..formats.binary import read_latents, write_latents
from ..formats.frames import read_ppm, write_ppm
from ..vision.canny import canny
from ..vision.flow import optical_flow, warp
from .common import ConfigFile, config_from, handle_errors, print

__all__ = ['canny_cmd', 'flow_cmd', 'warp_cmd']


def _gray_frame(img: np.ndarray) -> np.ndarray:
    return np.repeat(img[None].astype(np.float64), 3, axis=0)


@handle_errors
def canny_cmd(ctx: typer.Context,
              image: Annotated[Path, typer.Option('--input', '-i', help="Input PPM image")],
              output: Annotated[Path, typer.Option('--output', '-o', help="Output PPM edge map")],
              config_file: ConfigFile = None):
    """
    Canny edge map of an image (white edges on black).
    """
    config = config_from(ctx, config_file)
    edges = canny(read_ppm(image), config.canny_params())
    write_ppm(output, _gray_frame(edges))
    print(f"[success]{int(edges.sum())} edge pixels written to {output}[/success]")


@handle_errors
def flow_cmd(ctx: typer.Context,
             first: Annotated[Path, typer.Option('--first', help="Earlier PPM frame")],
             second: Annotated[Path, typer.Option('--second', help="Later PPM frame")],
             output: Annotated[Path, typer.Option('--output', '-o', help="Output flow as a (1, 2, H, W) ANCH block")],
             config_file: ConfigFile = None):
    """
    Horn-Schunck optical flow from the first frame to the second.
    """
    config = config_from(ctx, config_file)
    flow = optical_flow(read_ppm(first), read_ppm(second), config.flow_params())
    write_latents(output, flow[None])
    magnitude = np.hypot(flow[0], flow[1])
    print(f"[success]Flow written to {output}[/success] (mean magnitude {magnitude.mean():.4f} px)")


@handle_errors
def warp_cmd(image: Annotated[Path, typer.Option('--input', '-i', help="PPM frame to warp")],
             flow: Annotated[Path, typer.Option('--flow', help="Flow as written by the flow command")],
             output: Annotated[Path, typer.Option('--output', '-o', help="Output PPM frame")],
             mask: Annotated[Optional[Path], typer.Option('--mask', help="Optional PPM validity mask")] = None):
    """
    Backward-warp a frame along a flow field with bilinear sampling.
    """
    field = read_latents(flow)[0]
    warped, valid = warp(read_ppm(image), field)
    write_ppm(output, warped)
    if mask is not None:
        write_ppm(mask, _gray_frame(valid))
    print(f"[success]Warped frame written to {output}[/success] ({valid.mean() * 100:.1f}% valid)")
