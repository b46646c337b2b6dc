"""Anytime MAPF by iterative refinement of agent subsets."""

__version__ = "0.1.0"
