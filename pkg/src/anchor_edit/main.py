import typer
import logging
import rich
from rich.logging import RichHandler
from rich.theme import Theme
from pathlib import Path
from typing import Annotated, Optional

from .cli.common import CONFIG_CONTEXT, attach_file_log
from .cli import evaluate, fixtures, stages, vision
from .helper import config

try:
    from .experiments.main import app as experiments_app
    HAVE_EXPERIMENTS = True
except ImportError:
    HAVE_EXPERIMENTS = False

custom_theme = Theme({
    "info": "dim white",
    "warning": "bold yellow",
    "warn": "bold yellow",
    "error": "bold red",
    "err": "bold red",
    "success": "bold green",
    "h1": "bold underline green",
    "h2": "bold underline white",
})

FORMAT = "%(message)s"
logging.basicConfig(
    level=logging.WARNING, format=FORMAT, datefmt="[%X]", handlers=[RichHandler()]
)
rich.reconfigure(theme=custom_theme, soft_wrap=True)

app = typer.Typer()


@app.callback()
def main(
    verbose: Annotated[bool, typer.Option('--verbose', '-v', help="Log progress at INFO level")] = False,
    debug: Annotated[bool, typer.Option('--debug', help="Log at DEBUG level")] = False,
    fusion_log: Annotated[Optional[Path], typer.Option(
        '--fusion-log', help="Write the per-timestep cross-pair fusion log to this file")] = None,
    timing_log: Annotated[Optional[Path], typer.Option(
        '--timing-log', help="Write per-segment interpolation timings to this file")] = None,
):
    """
    Anchor-frame video editing: pairwise anchor editing, bidirectional interpolation and consistency metrics
    """
    if debug:
        logging.getLogger().setLevel(logging.DEBUG)
    elif verbose:
        logging.getLogger().setLevel(logging.INFO)
    if fusion_log is not None:
        attach_file_log("anchor_edit.fusion", fusion_log)
    if timing_log is not None:
        attach_file_log("anchor_edit.timing", timing_log)


# Pipeline stages
app.command('invert', context_settings=CONFIG_CONTEXT)(stages.invert_cmd)
app.command('edit-anchors', context_settings=CONFIG_CONTEXT)(stages.edit_anchors_cmd)
app.command('interpolate', context_settings=CONFIG_CONTEXT)(stages.interpolate_cmd)
app.command('pipeline', context_settings=CONFIG_CONTEXT)(stages.pipeline_cmd)
app.command('weights', context_settings=CONFIG_CONTEXT)(stages.weights_cmd)

# Vision kernels and evaluation
app.command('canny', context_settings=CONFIG_CONTEXT)(vision.canny_cmd)
app.command('flow', context_settings=CONFIG_CONTEXT)(vision.flow_cmd)
app.command('warp')(vision.warp_cmd)
app.command('metrics', context_settings=CONFIG_CONTEXT)(evaluate.metrics_cmd)
app.command('fixtures', context_settings=CONFIG_CONTEXT)(fixtures.fixtures_cmd)

# Basic helper utilities
app.add_typer(config.app, name="config")

if HAVE_EXPERIMENTS:
    app.add_typer(experiments_app, name="experiments", help="Ablation experiments (requires the experiments extra)")
