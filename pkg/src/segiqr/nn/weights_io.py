"""Portable weight container.

Binary, little-endian: magic "SFW1", u32 version=1, u32 total parameter
count, u32 tensor count, then per tensor: u16 name length, UTF-8 name,
u8 rank, rank x u32 extents, and extent-product x f32 values.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from segiqr.errors import FormatError, TruncatedError, WeightShapeError
from segiqr.nn.config import ArchConfig
from segiqr.nn.network import Network, build_network
from segiqr.data.atomic import atomic_write_bytes

MAGIC = b"SFW1"
VERSION = 1


def _tensor_items(net: Network):
    for i, params in enumerate(net.params):
        for name in sorted(params):
            yield f"layer{i}.{name}", params[name]


def weights_to_bytes(net: Network) -> bytes:
    chunks = [MAGIC, struct.pack("<III", VERSION, net.count_parameters(),
                                 sum(1 for _ in _tensor_items(net)))]
    for name, tensor in _tensor_items(net):
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<B", tensor.ndim))
        chunks.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        chunks.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    return b"".join(chunks)


def save_weights(net: Network, path: str | Path):
    atomic_write_bytes(Path(path), weights_to_bytes(net))


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedError(
                f"{self.source}: needed {n} bytes at offset {self.pos}, "
                f"file has {len(self.data)}"
            )
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_weights(path: str | Path, arch: ArchConfig) -> Network:
    """Builds the network from `arch` and replaces its weights from the file.

    Magic/version mismatch, truncation, and tensor shape mismatch raise
    distinct error types.
    """
    path = Path(path)
    r = _Reader(path.read_bytes(), str(path))
    if r.take(4) != MAGIC:
        raise FormatError(f"{path}: bad magic, not a weight container")
    version, declared_params, tensor_count = r.unpack("<III")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    loaded: dict[str, np.ndarray] = {}
    for _ in range(tensor_count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (rank,) = r.unpack("<B")
        shape = r.unpack(f"<{rank}I")
        count = int(np.prod(shape)) if rank else 1
        values = np.frombuffer(r.take(count * 4), dtype="<f4").reshape(shape)
        loaded[name] = values.astype(np.float32)
    if r.pos != len(r.data):
        raise FormatError(f"{path}: {len(r.data) - r.pos} trailing bytes after last tensor")
    total = sum(int(t.size) for t in loaded.values())
    if total != declared_params:
        raise FormatError(f"{path}: header declares {declared_params} parameters, tensors hold {total}")

    net = build_network(arch)
    expected = {name: tensor for name, tensor in _tensor_items(net)}
    if set(expected) != set(loaded):
        missing = sorted(set(expected) - set(loaded))
        extra = sorted(set(loaded) - set(expected))
        raise WeightShapeError(f"{path}: tensor names do not match config (missing {missing}, extra {extra})")
    for name, tensor in expected.items():
        if loaded[name].shape != tensor.shape:
            raise WeightShapeError(
                f"{path}: tensor {name} has shape {loaded[name].shape}, config expects {tensor.shape}"
            )
    for i, params in enumerate(net.params):
        for name in params:
            params[name] = loaded[f"layer{i}.{name}"]
    return net
