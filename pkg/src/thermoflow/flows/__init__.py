from thermoflow.flows.base import FiberRate
from thermoflow.flows.fiber import FiberPotential, FiberTerm, PiecewiseFiber, ReciprocalRate
from thermoflow.flows.suspension import FlowMeasure, FlowPoint, SuspensionFlow

__all__ = [
    "FiberPotential",
    "FiberRate",
    "FiberTerm",
    "FlowMeasure",
    "FlowPoint",
    "PiecewiseFiber",
    "ReciprocalRate",
    "SuspensionFlow",
]
