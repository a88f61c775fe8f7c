"""
Output helpers: JSON with decimal-string numerics and CSV through pandas.
"""

from pathlib import Path
from typing import Any, Dict, Union
import json
import logging

import mpmath as mp
import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def mp_to_str(x, digits: int) -> Union[str, list]:
    """Decimal string of an mpf, or [re, im] strings of an mpc."""
    if isinstance(x, mp.mpc) or isinstance(x, complex):
        x = mp.mpc(x)
        return [mp.nstr(x.real, digits, strip_zeros=False), mp.nstr(x.imag, digits, strip_zeros=False)]
    return mp.nstr(mp.mpf(x), digits, strip_zeros=False)


def mp_from_str(value) -> Union[mp.mpf, mp.mpc]:
    if isinstance(value, (list, tuple)):
        return mp.mpc(mp.mpf(value[0]), mp.mpf(value[1]))
    return mp.mpf(value)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (mp.mpf, mp.mpc)):
        return mp_to_str(obj, mp.mp.dps)
    return obj


def write_json(data: Dict, path: Union[str, Path]) -> Path:
    """Write UTF-8 JSON, keys sorted so reruns are byte-identical."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(data), f, indent=2, ensure_ascii=False, sort_keys=True)
    logger.info(f"Wrote {path}")
    return path


def read_json(path: Union[str, Path]) -> Dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.15g")
    logger.info(f"Wrote {path} ({len(frame)} rows)")
    return path


def points_frame(points, value=None, s=None) -> pd.DataFrame:
    """CSV frame with the fixed columns s, re, im, value."""
    points = np.asarray(points, dtype=complex)
    return pd.DataFrame({
        "s": np.arange(len(points), dtype=float) if s is None else np.asarray(s, dtype=float),
        "re": points.real,
        "im": points.imag,
        "value": np.zeros(len(points)) if value is None else np.asarray(value, dtype=float),
    })
