"""Growth rates of branching populations with dormancy in a two-state random environment."""

__version__ = "0.1.0"
