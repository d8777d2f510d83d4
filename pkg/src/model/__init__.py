"""Geometry, sections, regions, concentration spectra and the Fock cross-check."""
