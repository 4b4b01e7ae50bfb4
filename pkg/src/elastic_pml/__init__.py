"""Layered elastic wave simulation with a PML, and mode analysis."""
