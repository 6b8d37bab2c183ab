"""Control stack and desk-scale simulator for a garbage-collecting robot."""

__version__ = "0.1.0"
