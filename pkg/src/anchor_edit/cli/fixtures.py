from pathlib import Path
from typing import Annotated

import typer

from ..formats.fixtures import FixtureKind, make_fixture
from ..formats.frames import save_frames
from .common import ConfigFile, config_from, handle_errors, print

__all__ = ['fixtures_cmd']


@handle_errors
def fixtures_cmd(ctx: typer.Context,
                 output: Annotated[Path, typer.Option('--output', '-o', help="Output frame directory")],
                 kind: Annotated[FixtureKind, typer.Option('--kind', help="Synthetic motion pattern")] = FixtureKind.TRANSLATING,
                 frames: Annotated[int, typer.Option('--frames', min=1, help="Number of frames")] = 49,
                 seed: Annotated[int, typer.Option('--seed', help="Fixture seed")] = 0,
                 config_file: ConfigFile = None):
    """
    Write a seeded synthetic video, sized by the `width` and `height` configuration keys.
    """
    config = config_from(ctx, config_file)
    video = make_fixture(kind, frames, height=config.height, width=config.width, seed=seed)
    save_frames(video, output)
    print(f"[success]{frames} {kind} frames ({config.width}x{config.height}) written to {output}[/success]")
