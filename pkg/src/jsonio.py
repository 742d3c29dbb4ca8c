"""JSON file helpers shared by reports, configs and manifests."""

import json
from typing import Any, Dict, Type

from .errors import DataIOError, HazardError


def write_json(payload: Dict[str, Any], path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise DataIOError(f"failed to write {path}: {e}")


def read_json(path: str, malformed: Type[HazardError] = DataIOError) -> Any:
    """
    Load a JSON document.

    Missing or unreadable files raise DataIOError; content that does not
    parse raises ``malformed``.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise DataIOError(f"file not found: {path}")
    except OSError as e:
        raise DataIOError(f"failed to read {path}: {e}")
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise malformed(f"malformed JSON in {path}: {e}")
