"""Competitive Treasure Hunt: deterministic simulator, equilibrium solvers,
Monte Carlo strategy sweeps, behavioral-log analysis, and a live session
server for playing the game against bots or other humans."""

__version__ = "0.1.0"
