"""Bundled protocol scenarios and demo joint distributions."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def available() -> list[str]:
    return sorted(p.name for p in resources.files(__name__).iterdir() if p.suffix in (".json", ".txt"))


def path(name: str) -> Path:
    """Path of a bundled file; ``name`` may omit the ``.json`` suffix."""
    root = resources.files(__name__)
    for cand in (name, f"{name}.json"):
        p = root / cand
        if p.is_file():
            return Path(str(p))
    raise FileNotFoundError(name)
