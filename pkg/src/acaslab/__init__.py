"""acaslab: safe regions, winning strategies and falsification for ACAS X hybrid-game models."""

__version__ = "0.1.0"
