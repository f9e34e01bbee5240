"""Checkpoint files: one line of JSON, a newline, then the raw parameter block.

The parameter block is little-endian float32 in flat layout order (hidden
layers 0..depth-1, each weights-then-bias with weights in (channel, ky, kx)
order, then the output weights and bias), exactly the order of
MsdNetwork.theta.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .msd import MsdNetwork, parameter_count
from .optim import AdamState

__all__ = ["save_checkpoint", "load_checkpoint"]


def save_checkpoint(net: MsdNetwork, path, *, seed=None, adam=None, metadata=None) -> None:
    """Write the network to ``path`` with its training provenance header."""
    if isinstance(adam, AdamState):
        adam = adam.hyperparameters()
    header = {
        "depth": net.depth,
        "dilation_period": net.dilation_period,
        "seed": seed,
        "adam": adam,
        "metadata": metadata or {},
    }
    blob = net.theta.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(blob)


def load_checkpoint(path) -> tuple[MsdNetwork, dict]:
    """Read a checkpoint; returns (network, header).

    The parameter count must match the header's depth or the file is
    rejected as corrupt.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    newline = raw.find(b"\n")
    if newline < 0:
        raise ValueError(f"{os.fspath(path)}: missing checkpoint header")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{os.fspath(path)}: bad checkpoint header: {exc}") from exc
    for key in ("depth", "dilation_period"):
        if key not in header:
            raise ValueError(f"{os.fspath(path)}: checkpoint header is missing {key!r}")
    depth = int(header["depth"])
    period = int(header["dilation_period"])
    blob = raw[newline + 1 :]
    expected = parameter_count(depth)
    params = np.frombuffer(blob, dtype="<f4")
    if params.size != expected:
        raise ValueError(
            f"{os.fspath(path)}: parameter block holds {params.size} floats, "
            f"depth {depth} needs {expected}"
        )
    net = MsdNetwork(depth=depth, dilation_period=period, theta=params.astype(np.float64))
    return net, header
