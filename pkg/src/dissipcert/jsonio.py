"""Deterministic JSON emission.

Floats are printed with 17 significant digits so every 64-bit value
round-trips exactly and identical inputs yield byte-identical documents.
Key order is insertion order, never re-sorted.
"""

import json
import math


def _format_float(x):
    if math.isnan(x) or math.isinf(x):
        return "null"
    if x == int(x) and abs(x) < 1e15:
        # keep integral floats readable while still round-tripping
        return f"{x:.1f}"
    return f"{x:.17g}"


def dumps(obj, indent=0):
    """Serialize obj (dict/list/str/float/int/bool/None) to JSON text."""
    pad = " " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(str(k))}: {dumps(v, indent + 2)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = [f"{pad}  {dumps(v, indent + 2)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    # numpy scalars and similar
    if hasattr(obj, "item"):
        return dumps(obj.item(), indent)
    raise TypeError(f"cannot serialize {type(obj)!r}")
