"""roadforge: synthetic roadside-camera dataset generation and evaluation."""

__version__ = "0.1.0"
