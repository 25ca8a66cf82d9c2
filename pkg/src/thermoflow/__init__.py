"""Thermoflow: pressure, equilibrium states and time-changes of symbolic suspension flows."""
