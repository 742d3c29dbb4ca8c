"""CSV and JSON renderings of hazard curves."""

from typing import Any, Dict

import pandas as pd

from ..errors import DataIOError
from .base_estimator import HazardCurve


def curve_to_frame(curve: HazardCurve) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "time": curve.times,
            "increment": curve.increments,
            "cumulative": curve.cumulative(),
        }
    )


def curve_to_dict(curve: HazardCurve) -> Dict[str, Any]:
    return {
        "kind": curve.kind.value,
        "arm": curve.arm,
        "stratum": curve.stratum,
        "times": curve.times.tolist(),
        "increments": curve.increments.tolist(),
        "warnings": [w.to_dict() for w in curve.warnings],
    }


def write_curve_csv(curve: HazardCurve, path: str) -> None:
    try:
        curve_to_frame(curve).to_csv(path, index=False, encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"failed to write curve {curve.label} to {path}: {e}")

