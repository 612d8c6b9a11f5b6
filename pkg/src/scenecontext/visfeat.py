"""File-backed visual features for relationship pairs, plus a stub.

Real features come from a CNN run elsewhere and land here as an RFV1
file: magic ``RFV1``, u32 little-endian dimension, u32 entry count,
then per entry a u16 key length, the UTF-8 key ``image_id|subj_id|obj_id``,
and dimension float32 little-endian components.

The stub provider hashes the key with FNV-1a 64 and expands it through
the splitmix64 finalizer, one counter step per component, mapping each
64-bit draw onto [-1, 1].  Pure function of (key, dim, seed), identical
on every platform; handy for tests and for feature-ablation runs where
no CNN output exists.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .fileio import atomic_write, read_exact

MAGIC = b"RFV1"

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_GOLDEN = 0x9E3779B97F4A7C15


class FeatureFormatError(ValueError):
    """Raised on malformed RFV1 bytes; message carries the byte offset."""


class MissingFeature(KeyError):
    def __init__(self, key_text: str):
        super().__init__(key_text)
        self.key_text = key_text

    def __str__(self):
        return f"no visual feature stored for {self.key_text!r}"


@dataclass(frozen=True)
class RelationshipKey:
    image_id: str
    subject_instance_id: int
    object_instance_id: int

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if "|" in self.image_id:
            raise ValueError(f"image_id {self.image_id!r} may not contain '|'")
        if self.subject_instance_id < 0 or self.object_instance_id < 0:
            raise ValueError("instance ids must be non-negative")
        if self.subject_instance_id == self.object_instance_id:
            raise ValueError("subject and object must be distinct instances")

    @property
    def text(self) -> str:
        return f"{self.image_id}|{self.subject_instance_id}|{self.object_instance_id}"


@dataclass
class FeatureStore:
    dimension: int = 4096
    _vectors: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be at least 1")

    def __len__(self):
        return len(self._vectors)

    def __contains__(self, key) -> bool:
        return _key_text(key) in self._vectors

    def keys(self):
        return self._vectors.keys()

    def put(self, key, vector) -> None:
        vec = np.asarray(vector, dtype=np.float32)
        if vec.shape != (self.dimension,):
            raise ValueError(
                f"vector has shape {vec.shape}, store dimension is {self.dimension}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"non-finite feature components for {_key_text(key)!r}")
        self._vectors[_key_text(key)] = vec


def _key_text(key) -> str:
    return key.text if isinstance(key, RelationshipKey) else str(key)


def get_visual(store: FeatureStore, key) -> np.ndarray:
    """The stored vector for the key, widened to float64 (exact)."""
    text = _key_text(key)
    try:
        vec = store._vectors[text]
    except KeyError:
        raise MissingFeature(text) from None
    return vec.astype(np.float64)


def load_features(source) -> FeatureStore:
    close = False
    if not hasattr(source, "read"):
        source, close = open(source, "rb"), True
    try:
        magic = read_exact(source, 4, 0, "magic")
        if magic != MAGIC:
            raise FeatureFormatError(
                f"bad magic {magic!r} at offset 0, expected {MAGIC!r}"
            )
        dim, count = struct.unpack("<II", read_exact(source, 8, 4, "header"))
        if dim < 1:
            raise FeatureFormatError("declared dimension is zero at offset 4")
        store = FeatureStore(dim)
        offset = 12
        payload = dim * 4
        for i in range(count):
            (key_len,) = struct.unpack(
                "<H", read_exact(source, 2, offset, f"key length of entry {i}")
            )
            offset += 2
            key_bytes = read_exact(source, key_len, offset, f"key of entry {i}")
            offset += key_len
            try:
                key_text = key_bytes.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FeatureFormatError(
                    f"entry {i}: key is not valid UTF-8 at offset {offset - key_len}"
                ) from exc
            if key_text in store._vectors:
                raise FeatureFormatError(
                    f"entry {i}: duplicate key {key_text!r} at offset {offset - key_len}"
                )
            raw = read_exact(source, payload, offset, f"vector of entry {i}")
            offset += payload
            vec = np.frombuffer(raw, dtype="<f4").copy()
            if not np.all(np.isfinite(vec)):
                raise FeatureFormatError(
                    f"entry {i} ({key_text!r}): non-finite component before offset {offset}"
                )
            store._vectors[key_text] = vec
        trailing = source.read(1)
        if trailing:
            raise FeatureFormatError(f"trailing bytes after entry {count - 1} at offset {offset}")
        return store
    finally:
        if close:
            source.close()


def save_features(store: FeatureStore, path) -> None:
    """Entries written sorted by key so reruns are byte-identical."""
    with atomic_write(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", store.dimension, len(store._vectors)))
        for key_text in sorted(store._vectors):
            encoded = key_text.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"key too long to serialize: {key_text[:40]!r}...")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(store._vectors[key_text].astype("<f4").tobytes())


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _mix64_scalar(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stub_visual(key, dim: int = 4096, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-feature for a relationship key.

    base = fnv1a64(key bytes) xor mix64(seed); component i is
    mix64(base + (i+1) * golden) mapped to [-1, 1] by taking the top
    53 bits as a fraction.  No state, no platform dependence.
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    base = _fnv1a64(_key_text(key).encode("utf-8")) ^ _mix64_scalar(seed & _MASK64)
    with np.errstate(over="ignore"):
        counters = np.arange(1, dim + 1, dtype=np.uint64)
        z = np.uint64(base) + counters * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    unit = (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return 2.0 * unit - 1.0
