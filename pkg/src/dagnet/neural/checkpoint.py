"""Single-file network checkpoints.

Layout: the magic bytes, an 8-byte little-endian header length, a JSON header
(build spec, graph, block sizes, array manifest) and then the raw
little-endian float64 arrays in manifest order.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import FormatError
from ..graph import graph_from_dict, graph_to_dict
from .network import BuildSpec, MaskedNetwork

MAGIC = b"DAGNET1\n"
FORMAT_VERSION = 1


def _arrays(net: MaskedNetwork) -> list:
    out = [(f"param:{k}", v) for k, v in sorted(net.params.items())]
    out += [(f"mask:{k}", v) for k, v in sorted(net.masks.items())]
    out += [(f"alive:{k}", v) for k, v in sorted(net.alive.items())]
    out += [("input:mean", net.input_mean), ("input:std", net.input_std)]
    return out


def dumps_network(net: MaskedNetwork, run: dict | None = None) -> bytes:
    manifest = []
    blobs = []
    offset = 0
    for name, arr in _arrays(net):
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        manifest.append({"name": name, "shape": list(np.shape(arr)), "offset": offset})
        blobs.append(data)
        offset += len(data)
    header = {
        "version": FORMAT_VERSION,
        "spec": net.spec.to_dict(),
        "graph": graph_to_dict(net.graph),
        "sizes": list(net.sizes),
        "arrays": manifest,
    }
    if run is not None:
        header["run"] = run
    head = json.dumps(header, sort_keys=True).encode()
    return MAGIC + struct.pack("<Q", len(head)) + head + b"".join(blobs)


def loads_network(data: bytes) -> MaskedNetwork:
    if not data.startswith(MAGIC):
        raise FormatError("not a network checkpoint")
    try:
        (hlen,) = struct.unpack("<Q", data[len(MAGIC) : len(MAGIC) + 8])
        start = len(MAGIC) + 8
        header = json.loads(data[start : start + hlen])
        body = memoryview(data)[start + hlen :]
        spec = BuildSpec.from_dict(header["spec"])
        graph = graph_from_dict(header["graph"])
        groups = {"param": {}, "mask": {}, "alive": {}, "input": {}}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            off = entry["offset"]
            raw = np.frombuffer(body[off : off + 8 * count], dtype="<f8", count=count)
            kind, key = entry["name"].split(":", 1)
            groups[kind][key] = raw.astype(np.float64).reshape(shape)
    except (KeyError, ValueError, TypeError, struct.error) as exc:
        raise FormatError(f"corrupt checkpoint: {exc}") from exc
    return MaskedNetwork(
        graph,
        spec,
        list(header["sizes"]),
        groups["param"],
        groups["mask"],
        groups["alive"],
        groups["input"]["mean"],
        groups["input"]["std"],
    )


def save_network(net: MaskedNetwork, path, run: dict | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_network(net, run))


def load_network(path) -> MaskedNetwork:
    with open(path, "rb") as fh:
        return loads_network(fh.read())
