"""Versioned checkpoint container: network weights, PCA model, tabular
standardizer, and the training configuration in one self-describing file.

Layout: magic ``T2S1``, version byte, little-endian u32 JSON header
length, JSON header (config plus an array name/shape table), then the
raw array payloads as little-endian float64 in table order. Round trips
are bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .features import TabStandardizer
from .io import BadMagic, BadVersion, TruncatedFile
from .net import VARIANTS
from .pca import PcaModel

__all__ = ["TrainConfig", "Checkpoint", "save_checkpoint", "load_checkpoint"]

CHECKPOINT_MAGIC = b"T2S1"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "full"
    batch_size: int = 32
    epochs: int = 30
    lr0: float = 2e-3
    sched_period: int = 200
    sched_gamma: float = 0.1
    lam_pair: float = 1.0
    weight_decay: float = 0.005
    n_points: int = 1024
    pca_k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.batch_size < 2 or self.batch_size % 2 != 0:
            raise ValueError("batch_size must be even (Siamese pairing)")
        if self.lam_pair < 0:
            raise ValueError("lam_pair must be >= 0")


@dataclass(frozen=True)
class Checkpoint:
    config: TrainConfig
    params: dict  # name -> float64 array
    pca: PcaModel
    standardizer: TabStandardizer | None  # None for point-only variants


_PCA_FIELDS = (
    "feature_mean",
    "feature_sd",
    "components",
    "explained_variance",
    "explained_variance_ratio",
    "score_sd",
)


def save_checkpoint(ckpt: Checkpoint) -> bytes:
    arrays: dict[str, np.ndarray] = {}
    for name in sorted(ckpt.params):
        arrays[f"net.{name}"] = np.asarray(ckpt.params[name], dtype=np.float64)
    for field_name in _PCA_FIELDS:
        arrays[f"pca.{field_name}"] = np.asarray(getattr(ckpt.pca, field_name), dtype=np.float64)
    if ckpt.standardizer is not None:
        arrays["tab.mean"] = np.asarray(ckpt.standardizer.mean, dtype=np.float64)
        arrays["tab.sd"] = np.asarray(ckpt.standardizer.sd, dtype=np.float64)

    table = [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()]
    header = {
        "config": asdict(ckpt.config),
        "has_standardizer": ckpt.standardizer is not None,
        "arrays": table,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<B", CHECKPOINT_VERSION),
        struct.pack("<I", len(header_bytes)),
        header_bytes,
    ]
    for entry in table:
        parts.append(arrays[entry["name"]].astype("<f8").tobytes())
    return b"".join(parts)


def load_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < 4:
        raise TruncatedFile("shorter than magic")
    if data[:4] != CHECKPOINT_MAGIC:
        raise BadMagic(f"bad checkpoint magic {data[:4]!r}")
    if len(data) < 9:
        raise TruncatedFile("missing version/header length")
    if data[4] != CHECKPOINT_VERSION:
        raise BadVersion(f"unsupported checkpoint version {data[4]}")
    (hlen,) = struct.unpack_from("<I", data, 5)
    if len(data) < 9 + hlen:
        raise TruncatedFile("header truncated")
    header = json.loads(data[9 : 9 + hlen].decode("utf-8"))

    pos = 9 + hlen
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if pos + nbytes > len(data):
            raise TruncatedFile(f"array {entry['name']!r} truncated")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(shape)
        arrays[entry["name"]] = arr.copy()
        pos += nbytes

    config = TrainConfig(**header["config"])
    params = {k[len("net.") :]: v for k, v in arrays.items() if k.startswith("net.")}
    pca = PcaModel(**{f: arrays[f"pca.{f}"] for f in _PCA_FIELDS})
    standardizer = None
    if header["has_standardizer"]:
        standardizer = TabStandardizer(mean=arrays["tab.mean"], sd=arrays["tab.sd"])
    return Checkpoint(config=config, params=params, pca=pca, standardizer=standardizer)
