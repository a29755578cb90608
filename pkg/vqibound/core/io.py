"""
File output helpers.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write text to a file through a temporary sibling and a rename.

    Args:
        path: Destination file.
        text: Full file contents.

    Returns:
        The destination path.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp_name, target)
    except Exception:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.debug(f"Wrote {target}")
    return target


def atomic_write_json(path: str | Path, payload: dict[str, Any]) -> Path:
    """Write a JSON document with stable key order."""
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
