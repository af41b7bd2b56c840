"""Dataset loading and JSON serialization of hulls and center results.

Floats are written with Python's shortest round-trip representation (at
most 17 significant digits), so a save/load cycle is bit-exact.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import symcore
from .ballhull import BallHull
from .exceptions import DomainError
from .horofn import Flat, Horoball, Horofunction

logger = logging.getLogger(__name__)

ASYMMETRY_WARN = 1e-8


@dataclass
class Dataset:
    n: int
    points: np.ndarray
    labels: list = field(default=None)
    source: str = None

    def __len__(self):
        return len(self.points)


def _validate(points, source):
    out = []
    for k, p in enumerate(points):
        asym = float(np.abs(p - p.T).max())
        if asym > ASYMMETRY_WARN:
            logger.warning("%s: point %d asymmetric by %.3g, symmetrized", source, k, asym)
        p = symcore.sym(p)
        lam = np.linalg.eigvalsh(p)
        if not lam[0] > 0:
            raise DomainError(f"{source}: point {k} is not positive definite "
                              f"(min eigenvalue {lam[0]:.6g})")
        out.append(symcore.check_spd(p, f"point {k}"))
    return np.array(out)


def _from_upper(values, n):
    p = np.zeros((n, n))
    p[np.triu_indices(n)] = values
    return p + np.triu(p, 1).T


def load_json(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        n = int(doc["n"])
        points = np.array(doc["points"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"{path}: expected {{'n': k, 'points': [...]}} ({exc})") from exc
    if n < 1 or points.ndim != 3 or points.shape[1:] != (n, n):
        raise DomainError(f"{path}: points must be {n}x{n} matrices, got shape {points.shape}")
    return Dataset(n, _validate(points, path), doc.get("labels"), str(path))


def load_csv(path):
    """One point per row as its upper triangle, row-major; the header gives ``n``.

    The header is a single integer ``n`` or ``n=<k>``.
    """
    rows = []
    n = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row if c.strip()]
            if not cells or cells[0].startswith("#"):
                continue
            if n is None:
                head = cells[0].split("=")[-1]
                try:
                    n = int(head)
                except ValueError as exc:
                    raise DomainError(f"{path}: line {lineno}: header must give n") from exc
                if n < 1:
                    raise DomainError(f"{path}: line {lineno}: n must be positive")
                continue
            want = n * (n + 1) // 2
            if len(cells) != want:
                raise DomainError(f"{path}: line {lineno}: expected {want} values, got {len(cells)}")
            try:
                values = [float(c) for c in cells]
            except ValueError as exc:
                raise DomainError(f"{path}: line {lineno}: {exc}") from exc
            rows.append(_from_upper(values, n))
    if n is None or not rows:
        raise DomainError(f"{path}: no data")
    return Dataset(n, _validate(np.array(rows), path), None, str(path))


def load_dataset(path, fmt=None):
    """Load a dataset; ``fmt`` defaults to the file extension."""
    fmt = fmt or str(path).rsplit(".", 1)[-1].lower()
    if fmt == "json":
        return load_json(path)
    if fmt == "csv":
        return load_csv(path)
    raise DomainError(f"unknown dataset format {fmt!r}; use json or csv")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def dumps(doc):
    return json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n"


def hull_to_dict(hull):
    balls = []
    for hb, prov in zip(hull.horoballs, hull.provenance):
        h = hb.horofunction
        balls.append({"Q": h.flat.rotation, "a": h.direction, "sign": h.sign,
                      "level": hb.level, "provenance": prov})
    return {"n": hull.n, "epsilon": hull.epsilon, "d_X": hull.d_X,
            "origin_shift": hull.origin_shift, "origin_index": hull.origin_index,
            "horoballs": balls}


def hull_from_dict(doc):
    balls, prov = [], []
    for item in doc["horoballs"]:
        h = Horofunction(Flat(np.array(item["Q"], dtype=float)), np.array(item["a"], dtype=float),
                         int(item["sign"]))
        balls.append(Horoball(h, float(item["level"])))
        prov.append(item.get("provenance"))
    return BallHull(np.array(doc["origin_shift"], dtype=float), balls, prov,
                    float(doc["epsilon"]), float(doc["d_X"]), None, doc.get("origin_index"))


def center_to_dict(result):
    return {"p_hat": result.point, "max_violation": result.max_violation,
            "objective": result.objective, "constraints_count": result.constraints_count,
            "grid_size": result.grid_size, "seed": result.seed, "iterations": result.iterations}


def save_json(doc, path):
    with open(path, "w") as fh:
        fh.write(dumps(doc))


def load_hull(path):
    with open(path) as fh:
        return hull_from_dict(json.load(fh))


def load_center(path):
    """Center result JSON as a dict with ``p_hat`` as an array."""
    with open(path) as fh:
        doc = json.load(fh)
    doc["p_hat"] = np.array(doc["p_hat"], dtype=float)
    return doc
