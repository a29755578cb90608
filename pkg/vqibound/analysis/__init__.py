"""Fringe fitting, visibility traces and sidereal coverage."""
