"""Finite-state Markov chain toolkit for orbit-averaged samplers."""
