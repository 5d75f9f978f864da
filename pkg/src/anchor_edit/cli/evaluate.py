"""
Consistency metrics of an edited video against its original.
"""

from enum import Enum
from pathlib import Path
from typing import Annotated, Optional

import typer

from ..errors import ContractError
from ..formats.binary import read_embeddings
from ..formats.frames import load_frames
from ..helper.config import write_config_echo
from ..metrics.embedders import Embedder, ExternalEmbedder, ToyEmbedder
from ..metrics.suite import compute_report
from .common import ConfigFile, config_from, handle_errors, print

__all__ = ['ReportFormat', 'metrics_cmd']


class ReportFormat(Enum):
    JSON = "json"
    LINES = "lines"

    def __str__(self):
        return self.value


@handle_errors
def metrics_cmd(ctx: typer.Context,
                original: Annotated[Path, typer.Option('--original', help="Original frame directory")],
                edited: Annotated[Path, typer.Option('--edited', help="Edited frame directory")],
                embeddings: Annotated[Optional[Path], typer.Option(
                    '--embeddings', help="ASEM per-frame vectors; the built-in grid/gradient embedder otherwise")] = None,
                structural_embeddings: Annotated[Optional[Path], typer.Option(
                    '--structural-embeddings', help="ASEM per-frame vectors of a structure-oriented model")] = None,
                prompt_embedding: Annotated[Optional[Path], typer.Option(
                    '--prompt-embedding', help="ASEM file holding one prompt vector, enables text similarity")] = None,
                report: Annotated[Optional[Path], typer.Option('--report', help="Write the report to this file")] = None,
                fmt: Annotated[ReportFormat, typer.Option('--format', help="Report format")] = ReportFormat.JSON,
                config_file: ConfigFile = None):
    """
    Long-range and adjacent similarity, warp error, Canny error, entropy and optional text similarity.
    """
    config = config_from(ctx, config_file)
    before = list(load_frames(original))
    after = list(load_frames(edited))
    embedder: Embedder = ExternalEmbedder.from_file(embeddings) if embeddings is not None else ToyEmbedder()
    structural = ExternalEmbedder.from_file(structural_embeddings) if structural_embeddings is not None else None
    prompt = None
    if prompt_embedding is not None:
        prompt = read_embeddings(prompt_embedding)
        if len(prompt) != 1:
            raise ContractError(f"{prompt_embedding} must hold exactly one vector, found {len(prompt)}")

    result = compute_report(before, after, embedder, structural_embedder=structural, prompt_embedding=prompt,
                            canny_params=config.canny_params(), flow_params=config.flow_params(),
                            threads=config.threads)
    text = result.to_json() + "\n" if fmt == ReportFormat.JSON else result.to_lines()
    if report is not None:
        report.parent.mkdir(parents=True, exist_ok=True)
        report.write_text(text)
        write_config_echo(config, report.parent)
        print(f"[success]Report written to {report}[/success]")
    else:
        print(text, end="", markup=False, highlight=False)
