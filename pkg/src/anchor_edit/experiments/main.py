import typer

from ..cli.common import CONFIG_CONTEXT
from . import fusion, guidance, injection, sweep

app = typer.Typer(help="Ablation experiments on seeded fixtures or user videos")

app.command('fusion', context_settings=CONFIG_CONTEXT, help=fusion.__doc__)(fusion.run_cmd)
app.command('guidance', context_settings=CONFIG_CONTEXT, help=guidance.__doc__)(guidance.run_cmd)
app.command('injection', context_settings=CONFIG_CONTEXT, help=injection.__doc__)(injection.run_cmd)
app.add_typer(sweep.app, name="sweep")
