"""Coherence of quantum channels as a dynamical resource."""
