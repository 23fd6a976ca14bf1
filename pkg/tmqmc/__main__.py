from tmqmc.main import cli

cli()
