"""
Simulador de Quantum Annealing por Transfer-Matrix Monte Carlo
Entry point da CLI
"""
from typing import Optional

import click

from tmqmc.commands.cli import COMMANDS
from tmqmc.config import settings
from tmqmc.log import setup_logging


@click.group(name=settings.APP_NAME)
@click.version_option(settings.APP_VERSION, prog_name=settings.APP_NAME)
@click.option("--log-level", default=None, help="Overrides LOG_LEVEL")
@click.option("--json-logs", is_flag=True, default=None, help="Structured JSON logs on stderr")
def cli(log_level: Optional[str], json_logs: Optional[bool]):
    """Annealing quântico simulado sobre vidros de spin ±J de alcance infinito"""
    setup_logging(log_level, json_logs or None)


# Registrar comandos
for command in COMMANDS:
    cli.add_command(command)


if __name__ == "__main__":
    cli()
