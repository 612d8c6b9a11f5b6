"""Word-vector file parsing and name-to-vector resolution.

Reads the two common interchange formats for pretrained vectors:

* text — first line ``"<vocab_count> <dimension>"``, then one
  ``"word v1 ... vd"`` line per entry;
* binary — same ASCII header terminated by ``\\n``, then per record the
  word bytes terminated by a single ``0x20``, followed by ``d``
  little-endian IEEE-754 32-bit values, optionally followed by ``0x0A``.

Vectors are held at 64-bit precision; binary values widen exactly.
Multi-word names ("traffic light") resolve to the mean of their token
vectors so magnitudes stay comparable with single-token names.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .fileio import atomic_write, open_maybe_path, read_exact


class EmbeddingParseError(ValueError):
    """Malformed word-vector file."""


class OutOfVocabularyError(KeyError):
    """No token of the requested name is present in the table."""

    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"no vector for {self.name!r}"


class EmbeddingTable:
    """Immutable word -> vector(d) map."""

    def __init__(self, dimension: int, vectors: dict[str, np.ndarray]):
        if dimension < 1:
            raise ValueError(f"dimension must be positive, got {dimension}")
        self.dimension = dimension
        self._vectors = {}
        for word, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dimension,):
                raise ValueError(f"vector for {word!r} has shape {arr.shape}, want ({dimension},)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"vector for {word!r} has non-finite entries")
            self._vectors[word] = arr
        # case-insensitive fallback index; first occurrence wins
        self._lower = {}
        for word in self._vectors:
            self._lower.setdefault(word.lower(), word)

    def __len__(self):
        return len(self._vectors)

    def __contains__(self, word):
        return word in self._vectors

    def words(self):
        return self._vectors.keys()

    def vector(self, word: str) -> np.ndarray:
        return self._vectors[word]


def parse_text(source, restrict=None) -> EmbeddingTable:
    """Parse the text format; with ``restrict`` (a set of tokens) only
    matching words are kept, for opening very large files."""
    stream, should_close = open_maybe_path(source)
    try:
        header = stream.readline()
        count, dim = _parse_header(header.strip() if header else "")
        vectors: dict[str, np.ndarray] = {}
        parsed = 0
        for lineno, line in enumerate(stream, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            word, components = parts[0], parts[1:]
            if len(components) != dim:
                raise EmbeddingParseError(
                    f"line {lineno}: {word!r} has {len(components)} components, expected {dim}"
                )
            parsed += 1
            if restrict is not None and word not in restrict:
                continue
            if word in vectors:
                raise EmbeddingParseError(f"line {lineno}: duplicate word {word!r}")
            try:
                vectors[word] = np.array([float(c) for c in components], dtype=np.float64)
            except ValueError:
                raise EmbeddingParseError(f"line {lineno}: non-numeric component for {word!r}") from None
        if parsed != count:
            raise EmbeddingParseError(f"header declared {count} entries, file has {parsed}")
    finally:
        if should_close:
            stream.close()
    return EmbeddingTable(dim, vectors)


def parse_binary(source, restrict=None) -> EmbeddingTable:
    """Parse the binary format, widening 32-bit values to float64."""
    stream, should_close = open_maybe_path(source, "rb")
    try:
        header = bytearray()
        offset = 0
        while True:
            ch = stream.read(1)
            if not ch:
                raise EmbeddingParseError(f"byte offset {offset}: missing header line")
            offset += 1
            if ch == b"\n":
                break
            header += ch
            if len(header) > 128:
                raise EmbeddingParseError("byte offset 0: header line longer than 128 bytes")
        count, dim = _parse_header(header.decode("ascii", errors="replace"))

        vectors: dict[str, np.ndarray] = {}
        record_bytes = 4 * dim
        for i in range(count):
            word_bytes = bytearray()
            while True:
                ch = stream.read(1)
                if not ch:
                    raise EmbeddingParseError(
                        f"byte offset {offset}: truncated word in record {i}"
                    )
                offset += 1
                if ch == b" ":
                    break
                word_bytes += ch
            word = word_bytes.decode("utf-8", errors="replace").lstrip("\n")
            try:
                payload = read_exact(stream, record_bytes, offset, f"vector of record {i}")
            except ValueError as exc:
                raise EmbeddingParseError(str(exc)) from None
            offset += record_bytes
            if restrict is not None and word not in restrict:
                continue
            if word in vectors:
                raise EmbeddingParseError(f"byte offset {offset}: duplicate word {word!r}")
            values = struct.unpack(f"<{dim}f", payload)
            vectors[word] = np.array(values, dtype=np.float64)
    finally:
        if should_close:
            stream.close()
    return EmbeddingTable(dim, vectors)


def _parse_header(text: str) -> tuple[int, int]:
    parts = text.split()
    if len(parts) != 2:
        raise EmbeddingParseError(
            f"header must be '<vocab_count> <dimension>', got {text!r} (offset/line 0)"
        )
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise EmbeddingParseError(f"non-numeric header {text!r}") from None
    if count < 0 or dim < 1:
        raise EmbeddingParseError(f"nonsensical header counts {text!r}")
    return count, dim


def serialize_text(table: EmbeddingTable, path) -> None:
    """Write the text format with full round-trip precision."""
    with atomic_write(path) as fh:
        fh.write(f"{len(table)} {table.dimension}\n")
        for word in table.words():
            values = " ".join(repr(float(v)) for v in table.vector(word))
            fh.write(f"{word} {values}\n")


def serialize_binary(table: EmbeddingTable, path) -> None:
    """Write the binary format (values narrowed to 32-bit)."""
    with atomic_write(path, "wb") as fh:
        fh.write(f"{len(table)} {table.dimension}\n".encode("ascii"))
        for word in table.words():
            fh.write(word.encode("utf-8") + b" ")
            fh.write(np.asarray(table.vector(word), dtype="<f4").tobytes())
            fh.write(b"\n")


def lookup(table: EmbeddingTable, name: str, fallback: str = "error") -> np.ndarray:
    """Resolve a (possibly multi-word) name to a vector.

    A whole-name entry wins outright (cache files store one vector per
    dictionary name, spaces included).  Otherwise tokens are matched
    exactly, then case-insensitively, and multi-token names average the
    vectors of the tokens that were found.  When nothing resolves: raise
    (fallback="error") or return the zero vector (fallback="zero").
    """
    tokens = name.split()
    if not tokens:
        raise ValueError("empty name")
    if name in table:
        return table.vector(name).copy()
    alias = table._lower.get(name.lower())
    if alias is not None:
        return table.vector(alias).copy()
    found = []
    for token in tokens:
        if token in table:
            found.append(table.vector(token))
            continue
        alias = table._lower.get(token.lower())
        if alias is not None:
            found.append(table.vector(alias))
    if not found:
        if fallback == "zero":
            return np.zeros(table.dimension)
        raise OutOfVocabularyError(name)
    return np.mean(found, axis=0)


def concat_pair(subject_vec: np.ndarray, object_vec: np.ndarray) -> np.ndarray:
    """Subject components first, then object components (order matters)."""
    subject_vec = np.asarray(subject_vec, dtype=np.float64)
    object_vec = np.asarray(object_vec, dtype=np.float64)
    if subject_vec.shape != object_vec.shape or subject_vec.ndim != 1:
        raise ValueError(
            f"dimension mismatch: subject {subject_vec.shape} vs object {object_vec.shape}"
        )
    return np.concatenate([subject_vec, object_vec])


def build_cache(table: EmbeddingTable, names, fallback: str = "error") -> dict[str, list[float]]:
    """name -> vector map for every dictionary name (JSON-serializable)."""
    return {name: lookup(table, name, fallback=fallback).tolist() for name in names}


def save_cache(cache: dict[str, list[float]], path) -> None:
    with atomic_write(path) as fh:
        json.dump(cache, fh, indent=1)
        fh.write("\n")


def load_cache(path) -> dict[str, np.ndarray]:
    stream, should_close = open_maybe_path(path)
    try:
        raw = json.load(stream)
    finally:
        if should_close:
            stream.close()
    return {name: np.asarray(values, dtype=np.float64) for name, values in raw.items()}
