"""Expert-guided video recommendation: IRL on expert sessions, simulated users, baselines."""

__version__ = "0.1.0"
