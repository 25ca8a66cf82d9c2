"""Allow `python -m thermoflow`."""

from thermoflow.cli import app

app()
