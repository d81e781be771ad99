"""Model files: a NumPy ``.npz`` archive with a JSON header.

Layout (format version 1), entries in this order:

``header``
    UTF-8 JSON as a uint8 array: ``format``, ``format_version``, ``n_nodes``,
    ``window``, ``depth``, ``hidden_sizes``, ``output_peephole``, ``param_names``.
``normalizer_scale``
    float64 array of shape (1,).
``layer{i}.w_input``, ``layer{i}.w_recurrent``, ``layer{i}.w_peephole``, ``layer{i}.bias``
    float64 arrays for i = 0..depth-1, shapes (I, 4H), (H, 4H), (3, H), (4H,);
    gate column blocks ordered input, forget, cell, output.
``output.w_out``, ``output.b_out``
    float64 arrays of shapes (H_last, N*N) and (N*N,).

Arrays are stored raw, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import Normalizer
from ..errors import ParseError
from .lstm import LstmLayer
from .network import Network

FORMAT_NAME = "tmforecast-lstm"
FORMAT_VERSION = 1


@dataclass
class SavedModel:
    network: Network
    normalizer: Normalizer
    n_nodes: int
    window: int


def save_model(path, net: Network, normalizer: Normalizer, n_nodes: int, window: int) -> None:
    names = [name for name, _ in net.params()]
    header = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "n_nodes": n_nodes,
        "window": window,
        "depth": len(net.layers),
        "hidden_sizes": net.hidden_sizes,
        "output_peephole": net.layers[0].output_peephole,
        "param_names": names,
    }
    arrays = {"header": np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8)}
    arrays["normalizer_scale"] = np.array([normalizer.scale], dtype=np.float64)
    arrays.update(net.params())
    # np.savez stamps entries with the current time; a fixed stamp keeps files byte-identical
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            with zf.open(info, "w", force_zip64=True) as fh:
                np.lib.format.write_array(fh, np.ascontiguousarray(arr), allow_pickle=False)


def load_model(path) -> SavedModel:
    try:
        with np.load(Path(path), allow_pickle=False) as archive:
            header = json.loads(bytes(archive["header"]).decode("utf-8"))
            if header.get("format") != FORMAT_NAME or header.get("format_version") != FORMAT_VERSION:
                raise ParseError(f"unsupported model format {header.get('format')!r} "
                                 f"v{header.get('format_version')}")
            arrays = {name: archive[name] for name in header["param_names"]}
            scale = float(archive["normalizer_scale"][0])
    except (OSError, KeyError, ValueError, zipfile.BadZipFile) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"cannot read model file {path}: {exc}") from exc
    layers = [
        LstmLayer(*(arrays[f"layer{i}.{n}"] for n in LstmLayer.PARAMS), header["output_peephole"])
        for i in range(header["depth"])
    ]
    net = Network(layers, arrays["output.w_out"], arrays["output.b_out"])
    return SavedModel(net, Normalizer(scale), int(header["n_nodes"]), int(header["window"]))
