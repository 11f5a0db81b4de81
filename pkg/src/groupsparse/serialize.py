"""Versioned text model files.

Models are JSON documents whose numbers are written with 17 significant
digits, so a save/load cycle reproduces every float64 bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .network import Network

FORMAT_VERSION = 1


def _num(x) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("cannot serialize non-finite parameter")
    if x == 0 and np.signbit(x):
        return "-0.0"
    return format(x, ".17g")


def _vector(v) -> str:
    return "[" + ", ".join(_num(x) for x in v) + "]"


def _matrix(M, indent) -> str:
    pad = " " * indent
    rows = (",\n" + pad).join(_vector(r) for r in M)
    return "[\n" + pad + rows + "\n" + " " * (indent - 2) + "]"


def dumps_model(net: Network, metadata=None) -> str:
    meta = json.dumps(metadata or {}, sort_keys=True)
    lines = [
        "{",
        f'  "format_version": {FORMAT_VERSION},',
        f'  "layer_dims": {json.dumps(list(net.layer_dims))},',
        f'  "activations": {json.dumps(list(net.activations))},',
        f'  "metadata": {meta},',
        '  "weights": [',
        ",\n".join("    " + _matrix(W, 6) for W in net.weights),
        "  ],",
        '  "biases": [',
        ",\n".join("    " + _vector(b) for b in net.biases),
        "  ]",
        "}",
    ]
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> tuple[Network, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed model file: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("malformed model file: top level must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}, expected {FORMAT_VERSION}")
    try:
        dims = [int(d) for d in doc["layer_dims"]]
        weights = [np.array(W, dtype=np.float64) for W in doc["weights"]]
        biases = [np.array(b, dtype=np.float64) for b in doc["biases"]]
        activations = list(doc["activations"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed model file: {exc}") from None
    for k, W in enumerate(weights):
        if W.size == 0 and k + 1 < len(dims):
            weights[k] = W.reshape(dims[k + 1], dims[k])
    try:
        net = Network(tuple(dims), weights, biases, activations)
    except ValueError as exc:
        raise ValueError(f"inconsistent model file: {exc}") from None
    return net, doc.get("metadata", {})


def serialize_model(net: Network, path, metadata=None) -> None:
    Path(path).write_text(dumps_model(net, metadata))


def deserialize_model(path) -> tuple[Network, dict]:
    return loads_model(Path(path).read_text())
