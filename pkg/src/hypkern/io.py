"""JSON interchange: kernel files, point sets, embeddings, trees and glueing specs.

Complex scalars are always written as ``[re, im]`` pairs.
"""
from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from hypkern.kernels import ComplexHyperbolicKernel
from hypkern.minkowski import Field, MinkowskiPoint, MinkowskiSpace


class SchemaError(ValueError):
    pass


@lru_cache(maxsize=None)
def _validator(name):
    text = resources.files("hypkern").joinpath("schemas").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return jsonschema.Draft202012Validator(json.loads(text))


def _validate(obj, name):
    errors = sorted(_validator(name).iter_errors(obj), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise SchemaError(f"{name} file: field {where}: {e.message}")


def loads(text, schema):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    _validate(obj, schema)
    return obj


def read_json(path, schema):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), schema)


def dumps(obj):
    return json.dumps(obj, indent=1, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

def kernel_to_dict(K):
    return {
        "labels": list(K.labels),
        "beta": [[float(x) for x in row] for row in K.beta],
        "alpha": [{"ijk": list(ijk), "value": float(v)} for ijk, v in sorted(K.alpha.items())],
    }


def kernel_from_dict(d):
    _validate(d, "kernel")
    alpha = {}
    for entry in d.get("alpha", []):
        ijk = tuple(entry["ijk"])
        if ijk in alpha:
            raise SchemaError(f"alpha triple {list(ijk)} listed twice")
        alpha[ijk] = entry["value"]
    try:
        return ComplexHyperbolicKernel(d["labels"], d["beta"], alpha)
    except ValueError as e:
        raise SchemaError(f"kernel file: {e}") from None


def canonical_kernel_bytes(K):
    return dumps(kernel_to_dict(K)).encode("utf-8")


def kernel_sha(K):
    return hashlib.sha256(canonical_kernel_bytes(K)).hexdigest()


def read_kernel(path):
    return kernel_from_dict(read_json(path, "kernel"))


def write_kernel(K, path):
    with open(path, "wb") as fh:
        fh.write(canonical_kernel_bytes(K))


# --------------------------------------------------------------------------
# point sets and embeddings
# --------------------------------------------------------------------------

def _pairs(v):
    v = np.asarray(v)
    return [[float(np.real(x)), float(np.imag(x))] for x in v]


def points_to_dict(points):
    space = points[0].space
    return {"field": space.field.value, "n": space.n, "points": [_pairs(p.coords) for p in points]}


def points_from_dict(d):
    _validate(d, "points")
    space = MinkowskiSpace(Field(d["field"]), d["n"])
    pts = []
    for i, raw in enumerate(d["points"]):
        if len(raw) != space.dim:
            raise SchemaError(f"point set file: field points/{i}: expected {space.dim} coordinates")
        v = np.array([complex(re, im) for re, im in raw])
        if space.field is Field.REAL:
            if np.any(v.imag != 0):
                raise SchemaError(f"point set file: field points/{i}: complex coordinate in a real space")
            v = v.real
        try:
            pts.append(MinkowskiPoint.from_vector(space, v, canonical=False))
        except ValueError as e:
            raise SchemaError(f"point set file: field points/{i}: {e}") from None
    return pts


def embedding_to_dict(E):
    d = points_to_dict(E.points)
    d["base_index"] = E.base_index
    d["kernel_sha"] = kernel_sha(E.kernel)
    return d


# --------------------------------------------------------------------------
# trees and glueing specs
# --------------------------------------------------------------------------

def tree_from_dict(d):
    from hypkern.trees import MetricTree, TreeError

    _validate(d, "tree")
    try:
        return MetricTree.from_dict(d)
    except TreeError as e:
        raise SchemaError(f"tree file: {e}") from None


def glue_spec_from_dict(d):
    _validate(d, "glue")
    return d
