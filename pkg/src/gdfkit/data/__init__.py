"""Bundled sample inputs for demos and tests."""

from importlib.resources import files
from pathlib import Path

__all__ = ["bundled"]


def bundled(name: str) -> Path:
    """Path to a bundled data file, e.g. ``bundled('two_blobs.csv')``."""
    p = Path(str(files(__package__) / name))
    if not p.exists():
        raise FileNotFoundError(f"no bundled data file named {name!r}")
    return p
