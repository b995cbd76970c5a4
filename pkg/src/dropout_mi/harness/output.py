"""Deterministic CSV tables and JSON run manifests."""
from __future__ import annotations

import csv
import io
import json
import math
import platform
from pathlib import Path

import numpy as np

from .. import __version__
from ..estimators import ZERO_FLOOR
from ..numerics import RNG_ALGORITHM


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(rows: list[dict], path, header: list[str] | None = None) -> Path:
    """UTF-8, comma separated, ``\\n`` line endings, header row first.

    ``header`` fixes the column order (required when ``rows`` is empty);
    otherwise the keys of the first row are used.
    """
    path = Path(path)
    if header is None:
        if not rows:
            raise ValueError("an empty table needs an explicit header")
        header = list(rows[0])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([format_value(r.get(k)) for k in header])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def environment_info() -> dict:
    import scipy

    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "rng": RNG_ALGORITHM,
        "zero_floor": ZERO_FLOOR,
    }


def write_manifest(config: dict, path, extra: dict | None = None) -> Path:
    path = Path(path)
    doc = {"config": config, "environment": environment_info()}
    if extra:
        doc.update(extra)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, tuple)):
        return list(o)
    raise TypeError(f"{type(o).__name__} is not JSON serializable")
