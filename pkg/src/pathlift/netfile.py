"""Network files: JSON documents holding one architecture plus parameters.

Schema::

    {"neurons": [{"id": "h1", "activation": "relu"},
                 {"id": "p",  "activation": {"kpool": 2}}, ...],
     "edges":   [{"src": "in", "dst": "h1", "weight": 1.0}, ...],
     "biases":  {"h1": 0.0, ...}}

Activations are "input" | "identity" | "relu" | {"kpool": k}.  Omitted
biases default to 0; biases of kpool neurons are pinned to 0 regardless of
what the file says.  Entries carry exactly the keys shown above; unknown
keys are rejected so a misplaced parameter cannot be dropped silently.  Floats are written with Python's shortest round-trip
representation (up to 17 significant digits), so save -> load reproduces
every parameter bit for bit.
"""

from __future__ import annotations

import json
import os

from .errors import ParseError
from .graph import Architecture, ParamVector


def _activation_to_json(tag):
    return {"kpool": tag[1]} if isinstance(tag, tuple) else tag


def save_network(fp, arch: Architecture, theta: ParamVector) -> None:
    doc = {
        "neurons": [
            {"id": nid, "activation": _activation_to_json(tag)}
            for nid, tag in zip(arch.ids, arch.tags)
        ],
        "edges": [
            {"src": u, "dst": v, "weight": float(theta.vec[i])}
            for i, (u, v) in enumerate(arch.edges)
        ],
        "biases": {
            arch.ids[j]: float(theta.vec[arch.bias_coord[j]])
            for j in range(arch.n_neurons)
            if arch.bias_coord[j] >= 0
        },
    }
    own = isinstance(fp, (str, os.PathLike))
    fh = open(fp, "w") if own else fp
    try:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    finally:
        if own:
            fh.close()


def load_network(fp):
    """Read a network file; returns (architecture, parameters)."""
    own = isinstance(fp, (str, os.PathLike))
    fh = open(fp) if own else fp
    try:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"not valid JSON: {exc}") from exc
    finally:
        if own:
            fh.close()
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    for key in ("neurons", "edges"):
        if key not in doc or not isinstance(doc[key], list):
            raise ParseError(f"missing or malformed {key!r} list")
    neurons = []
    for item in doc["neurons"]:
        if not isinstance(item, dict) or "id" not in item or "activation" not in item:
            raise ParseError(f"malformed neuron entry {item!r}")
        extra = set(item) - {"id", "activation"}
        if extra:
            hint = "; biases belong in the top-level 'biases' table" if "bias" in extra else ""
            raise ParseError(f"unknown key(s) {sorted(extra)} in neuron entry {item['id']!r}{hint}")
        neurons.append((item["id"], item["activation"]))
    edges = []
    weights = {}
    for item in doc["edges"]:
        if not isinstance(item, dict) or not {"src", "dst", "weight"} <= set(item):
            raise ParseError(f"malformed edge entry {item!r}")
        extra = set(item) - {"src", "dst", "weight"}
        if extra:
            raise ParseError(f"unknown key(s) {sorted(extra)} in edge entry {item!r}")
        if not isinstance(item["weight"], (int, float)) or isinstance(item["weight"], bool):
            raise ParseError(f"edge weight must be a number: {item!r}")
        edges.append((item["src"], item["dst"]))
        weights[(str(item["src"]), str(item["dst"]))] = float(item["weight"])
    biases = doc.get("biases", {})
    if not isinstance(biases, dict):
        raise ParseError("'biases' must map neuron ids to numbers")
    for k, v in biases.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ParseError(f"bias of {k!r} must be a number")
    arch = Architecture(neurons, edges)
    theta = ParamVector.from_maps(arch, weights, {str(k): float(v) for k, v in biases.items()})
    return arch, theta
