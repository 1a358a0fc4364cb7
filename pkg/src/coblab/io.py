"""Serialisation, atomic writes and run manifests."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .complexes import INDEX_SCHEMA_VERSION

OUTPUT_SCHEMA = "coblab-output/1"
MANIFEST_SCHEMA = "coblab-manifest/1"


def _default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _finite(obj):
    # JSON has no inf/nan; spell them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_finite(json.loads(json.dumps(obj, default=_default))), sort_keys=True, indent=2) + "\n"


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def envelope(command: str, seed: int | None, params: dict, result) -> dict:
    return {"schema": OUTPUT_SCHEMA, "command": command, "seed": seed, "params": params, "result": result}


def manifest(command: str, argv: list[str], params: dict, seed: int | None, outputs: list[str], runtime: float) -> dict:
    """Config, code version and runtime; ``created``/``runtime_s`` are the only volatile fields."""
    from datetime import datetime, timezone

    import numba

    return {
        "schema": MANIFEST_SCHEMA,
        "face_index_schema": INDEX_SCHEMA_VERSION,
        "command": command,
        "argv": list(argv),
        "params": params,
        "seed": seed,
        "outputs": outputs,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba.__version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runtime_s": runtime,
    }
