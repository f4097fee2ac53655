"""JSON and CSV serialisation for tuples and reports.

Tuple files look like::

    {"format": 1, "dim": m, "d": d,
     "matrices": [[[[re, im], ...], ...], ...],
     "commutation": {"type": "q", "angle": "k/n"}
                  | {"type": "lambda", "angles": [["0/1", "1/2"], ...]}
                  | {"type": "none"},
     "blocks": [{"matrices": ...}, ...]}

``blocks`` is written for direct sums; when present it takes precedence and
``matrices`` may be omitted (large block-diagonal samples would otherwise be
mostly zeros).
"""

import json
import os
import platform
import sys
import time

import numpy as np

from .errors import SchemaError
from .tuples import LambdaMatrix, OperatorTuple, RationalAngle

FORMAT = 1
DENSE_LIMIT = 512


def _encode(M):
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _decode_stack(raw, path, d=None, m=None):
    """``raw``: d arrays of m x m [re, im] pairs -> complex array (d, m, m)."""
    if not isinstance(raw, list) or not raw:
        raise SchemaError("expected a non-empty list of matrices", path)
    out = []
    for i, mat in enumerate(raw):
        p = f"{path}[{i}]"
        if not isinstance(mat, list) or not mat:
            raise SchemaError("expected a square array of [re, im] pairs", p)
        size = len(mat)
        for r, row in enumerate(mat):
            if not isinstance(row, list) or len(row) != size:
                raise SchemaError(f"row must have {size} entries", f"{p}[{r}]")
            for c, z in enumerate(row):
                if (not isinstance(z, list) or len(z) != 2
                        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in z)):
                    raise SchemaError("entry must be a [re, im] pair of numbers", f"{p}[{r}][{c}]")
        arr = np.asarray(mat, dtype=float)
        out.append(arr[..., 0] + 1j * arr[..., 1])
    sizes = {a.shape[0] for a in out}
    if len(sizes) != 1:
        raise SchemaError("matrices have different sizes", path)
    stack = np.array(out)
    if d is not None and stack.shape[0] != d:
        raise SchemaError(f"expected {d} matrices, got {stack.shape[0]}", path)
    if m is not None and stack.shape[1] != m:
        raise SchemaError(f"expected {m}x{m} matrices, got {stack.shape[1]}", path)
    return stack


def commutation_to_json(comm):
    if comm is None:
        return {"type": "none"}
    if isinstance(comm, RationalAngle):
        return {"type": "q", "angle": str(comm)}
    if isinstance(comm, LambdaMatrix):
        return {"type": "lambda", "angles": comm.to_json()}
    raise TypeError(f"unknown commutation {comm!r}")


def commutation_from_json(doc, path="commutation"):
    if doc is None:
        return None
    if not isinstance(doc, dict) or "type" not in doc:
        raise SchemaError("expected an object with a 'type' key", path)
    kind = doc["type"]
    try:
        if kind == "none":
            return None
        if kind == "q":
            return RationalAngle.parse(doc["angle"])
        if kind == "lambda":
            return LambdaMatrix(doc["angles"])
    except KeyError as exc:
        raise SchemaError(f"missing key {exc.args[0]!r}", path) from exc
    except ValueError as exc:
        raise SchemaError(str(exc), path) from exc
    raise SchemaError(f"unknown commutation type {kind!r}", f"{path}.type")


def tuple_to_json(T):
    doc = {"format": FORMAT, "dim": T.m, "d": T.d, "commutation": commutation_to_json(T.commutation)}
    if T.m <= DENSE_LIMIT:
        doc["matrices"] = [_encode(M) for M in T.matrices]
    if len(T.blocks) > 1:
        doc["blocks"] = [{"matrices": [_encode(M) for M in b]} for b in T.blocks]
    return doc


def tuple_from_json(doc, check=True):
    if not isinstance(doc, dict):
        raise SchemaError("tuple document must be a JSON object")
    fmt = doc.get("format", FORMAT)
    if fmt != FORMAT:
        raise SchemaError(f"unsupported format {fmt!r}", "format")
    for key in ("dim", "d"):
        if not isinstance(doc.get(key), int) or doc[key] < 1:
            raise SchemaError("must be a positive integer", key)
    m, d = doc["dim"], doc["d"]
    comm = commutation_from_json(doc.get("commutation"))
    if "blocks" in doc:
        raw = doc["blocks"]
        if not isinstance(raw, list) or not raw:
            raise SchemaError("expected a non-empty list", "blocks")
        blocks = []
        for i, b in enumerate(raw):
            if not isinstance(b, dict) or "matrices" not in b:
                raise SchemaError("block needs 'matrices'", f"blocks[{i}]")
            blocks.append(_decode_stack(b["matrices"], f"blocks[{i}].matrices", d=d))
        if sum(b.shape[1] for b in blocks) != m:
            raise SchemaError(f"block sizes do not add up to dim={m}", "blocks")
    elif "matrices" in doc:
        blocks = [_decode_stack(doc["matrices"], "matrices", d=d, m=m)]
    else:
        raise SchemaError("need 'matrices' or 'blocks'", "matrices")
    try:
        return OperatorTuple(blocks, comm, check=check)
    except ValueError as exc:
        raise SchemaError(str(exc), "matrices") from exc


def load_tuple(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON ({exc.msg} at line {exc.lineno})", str(path)) from exc
    try:
        return tuple_from_json(doc)
    except SchemaError as exc:
        raise SchemaError(str(exc), f"{path}") from exc


def load_matrices(path):
    """A bare list of matrices (targets for membership / UCP tests)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        if "matrices" in doc and "blocks" not in doc:
            return _decode_stack(doc["matrices"], "matrices")
        return load_tuple(path).matrices
    return _decode_stack(doc, "matrices")


def manifest(subcommand, parameters, seeds=(), tolerances=None, started=None):
    from . import __version__
    return {
        "subcommand": subcommand,
        "parameters": parameters,
        "seeds": list(seeds),
        "tolerances": tolerances or {},
        "tool_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "threads": os.environ.get("THREADS", ""),
        "wall_time_s": None if started is None else round(time.time() - started, 6),
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def dumps(doc):
    return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"


def write_text(text, path):
    """Write to ``path`` (UTF-8, LF) or stdout when ``path`` is None or ``-``."""
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
