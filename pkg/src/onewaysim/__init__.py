"""Simulation and characterization of a one-way CNOT gate on a four-photon,
six-qubit hyper-entangled cluster state."""

__version__ = "0.1.0"
