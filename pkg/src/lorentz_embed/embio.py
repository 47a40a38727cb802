"""Embedding files: a ``# model=<lorentz|poincare> dim=<n>`` header, then ``id<TAB>c0<TAB>c1...``.

Coordinates are written with 17 significant digits so float64 values
survive the text roundtrip exactly.
"""

import json
import os
import re
import tempfile
from contextlib import contextmanager

import numpy as np

from .errors import DataError

MODELS = ("lorentz", "poincare")
_HEADER = re.compile(r"^#\s*model=(\w+)\s+dim=(\d+)\s*$")


@contextmanager
def atomic_open(path, mode="w"):
    """Write to a temporary file next to ``path`` and rename it into place on success."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode, encoding="utf-8", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def format_row(concept, coords):
    return concept + "\t" + "\t".join(format(float(c), ".17g") for c in coords) + "\n"


def write_embeddings(path, ids, coords, model="lorentz"):
    """Write coordinates for ``ids``. ``dim`` in the header is the hyperbolic dimension."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    coords = np.asarray(coords, dtype=np.float64)
    dim = coords.shape[1] - 1 if model == "lorentz" else coords.shape[1]
    for c in ids:
        if "\t" in c or "\n" in c:
            raise DataError(f"concept id {c!r} contains a tab or newline")
    with atomic_open(path) as fh:
        fh.write(f"# model={model} dim={dim}\n")
        for c, row in zip(ids, coords):
            fh.write(format_row(c, row))


def read_embeddings(path):
    """Read an embedding file. Returns ``(model, ids, coords)``."""
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise DataError("no such file", path=path) from None
    except OSError as exc:
        raise DataError(f"cannot read file ({exc.strerror})", path=path) from None
    with fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError("empty embedding file", path=path)
    m = _HEADER.match(lines[0])
    if not m or m.group(1) not in MODELS:
        raise DataError("missing '# model=<lorentz|poincare> dim=<n>' header", path=path, line=1)
    model, dim = m.group(1), int(m.group(2))
    width = dim + 1 if model == "lorentz" else dim
    ids, rows = [], []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != width + 1:
            raise DataError(f"expected {width} coordinates, got {len(cols) - 1}",
                            path=path, line=lineno)
        try:
            vals = [float(c) for c in cols[1:]]
        except ValueError:
            raise DataError("invalid coordinate", path=path, line=lineno) from None
        if not all(np.isfinite(vals)):
            raise DataError("non-finite coordinate", path=path, line=lineno)
        ids.append(cols[0])
        rows.append(vals)
    if len(set(ids)) != len(ids):
        raise DataError("duplicate concept ids", path=path)
    coords = np.asarray(rows, dtype=np.float64).reshape(len(rows), width)
    return model, ids, coords


def metadata_path(path):
    return str(path) + ".meta.json"


def write_metadata(path, meta):
    with atomic_open(metadata_path(path)) as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metadata(path):
    with open(metadata_path(path), encoding="utf-8") as fh:
        return json.load(fh)
