from __future__ import annotations

import enum
import json
import math
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

FLOAT_FORMAT = ".17g"
INDENT = "  "


def to_payload(value: Any) -> Any:
    """Plain JSON-ready data; pass/fail flags use their ``pass`` aliases."""
    if isinstance(value, BaseModel):
        return to_payload(value.model_dump(mode="python", by_alias=True))
    if isinstance(value, dict):
        return {str(key): to_payload(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_payload(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_payload(value.tolist())
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    return value


def _encode(value: Any, depth: int) -> str:
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        return format(value, FLOAT_FORMAT)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)

    pad = INDENT * (depth + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{pad}{json.dumps(key, ensure_ascii=False)}: {_encode(value[key], depth + 1)}"
            for key in sorted(value)
        ]
        return "{\n" + ",\n".join(items) + "\n" + INDENT * depth + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        items = [f"{pad}{_encode(item, depth + 1)}" for item in value]
        return "[\n" + ",\n".join(items) + "\n" + INDENT * depth + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(payload: Any) -> str:
    return _encode(to_payload(payload), 0) + "\n"


def write_json(path: Path, payload: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(dumps(payload))
