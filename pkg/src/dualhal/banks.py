"""On-disk data model: visual feature banks, semantic banks, activation maps.

Binary layouts (all integers little-endian u32 unless noted):

* feature bank  -- magic ``FSHB``, version, d, class count; per class:
  class_id (len + UTF-8), split u8 (0=base, 1=validation, 2=novel),
  n_c, then n_c*d float32.
* semantic bank -- magic ``FSSB``, version, m, entry count; per entry:
  class_id, m float32.
* activation maps -- magic ``FSAM``, version, entry count; per entry:
  sample_id, class_id, H, W, H*W float32.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

FORMAT_VERSION = 1

_MAGIC_FEATURES = b"FSHB"
_MAGIC_SEMANTICS = b"FSSB"
_MAGIC_MAPS = b"FSAM"


class BankError(Exception):
    """Base class for bank I/O and validation failures."""


class BankFormatError(BankError):
    """File is not a recognizable or complete bank file."""


class BankValidationError(BankError):
    """Bank contents violate a type invariant."""


class Split(IntEnum):
    BASE = 0
    VALIDATION = 1
    NOVEL = 2


@dataclass
class ClassFeatures:
    class_id: str
    split: Split
    features: np.ndarray  # (n_c, d) float32


@dataclass
class FeatureBank:
    dim: int
    classes: list[ClassFeatures]

    def validate(self):
        if self.dim <= 0:
            raise BankValidationError("invalid bank: dim must be positive")
        seen = set()
        for cls in self.classes:
            if cls.class_id in seen:
                raise BankValidationError(
                    f"invalid bank: duplicate class_id {cls.class_id!r}"
                )
            seen.add(cls.class_id)
            f = np.asarray(cls.features)
            if f.ndim != 2 or f.shape[1] != self.dim:
                raise BankValidationError(
                    f"invalid bank: class {cls.class_id!r} has shape {f.shape}, "
                    f"expected (n, {self.dim})"
                )
            if f.shape[0] < 1:
                raise BankValidationError(
                    f"invalid bank: class {cls.class_id!r} has no rows"
                )
            if not np.all(np.isfinite(f)):
                raise BankValidationError(
                    f"invalid bank: class {cls.class_id!r} contains non-finite values"
                )
            if np.any(f < 0):
                raise BankValidationError(
                    f"invalid bank: class {cls.class_id!r} contains negative values"
                )

    def class_ids(self, split: Split | None = None) -> list[str]:
        return [c.class_id for c in self.classes if split is None or c.split == split]

    def by_id(self, class_id: str) -> ClassFeatures:
        for c in self.classes:
            if c.class_id == class_id:
                return c
        raise KeyError(class_id)

    def __eq__(self, other):
        if not isinstance(other, FeatureBank):
            return NotImplemented
        if self.dim != other.dim or len(self.classes) != len(other.classes):
            return False
        for a, b in zip(self.classes, other.classes):
            if a.class_id != b.class_id or a.split != b.split:
                return False
            if not np.array_equal(
                np.asarray(a.features, dtype=np.float32),
                np.asarray(b.features, dtype=np.float32),
            ):
                return False
        return True


@dataclass
class SemanticBank:
    dim: int
    entries: dict[str, np.ndarray]  # class_id -> (m,) float32

    def validate(self):
        if self.dim <= 0:
            raise BankValidationError("invalid bank: dim must be positive")
        for cid, v in self.entries.items():
            v = np.asarray(v)
            if v.ndim != 1 or v.shape[0] != self.dim:
                raise BankValidationError(
                    f"invalid bank: semantic vector for {cid!r} has shape {v.shape}, "
                    f"expected ({self.dim},)"
                )
            if not np.all(np.isfinite(v)):
                raise BankValidationError(
                    f"invalid bank: semantic vector for {cid!r} is non-finite"
                )

    def __eq__(self, other):
        if not isinstance(other, SemanticBank):
            return NotImplemented
        if self.dim != other.dim or set(self.entries) != set(other.entries):
            return False
        return all(
            np.array_equal(
                np.asarray(self.entries[k], dtype=np.float32),
                np.asarray(other.entries[k], dtype=np.float32),
            )
            for k in self.entries
        )


@dataclass
class ActivationMapSet:
    entries: dict[tuple[str, str], np.ndarray]  # (sample_id, class_id) -> (H, W)

    def validate(self):
        for key, m in self.entries.items():
            m = np.asarray(m)
            if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
                raise BankValidationError(
                    f"invalid bank: activation map {key} has shape {m.shape}"
                )
            if not np.all(np.isfinite(m)) or np.any(m < 0) or np.any(m > 1):
                raise BankValidationError(
                    f"invalid bank: activation map {key} has values outside [0, 1]"
                )

    def __eq__(self, other):
        if not isinstance(other, ActivationMapSet):
            return NotImplemented
        if set(self.entries) != set(other.entries):
            return False
        return all(
            np.array_equal(
                np.asarray(self.entries[k], dtype=np.float32),
                np.asarray(other.entries[k], dtype=np.float32),
            )
            for k in self.entries
        )


@dataclass
class ValidationReport:
    missing_semantics: list[str] = field(default_factory=list)
    dimension_mismatches: list[str] = field(default_factory=list)
    negative_features: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.missing_semantics
            or self.dimension_mismatches
            or self.negative_features
        )


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise BankFormatError(
                f"truncated payload in {self.path} at offset {self.pos}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u8(self) -> int:
        return self.take(1)[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")

    def f32_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype="<f4").copy()


def write_bank(bank, path):
    """Serialize a bank to its binary format, refusing invalid banks."""
    bank.validate()
    chunks = []
    if isinstance(bank, FeatureBank):
        chunks.append(_MAGIC_FEATURES)
        chunks.append(struct.pack("<III", FORMAT_VERSION, bank.dim, len(bank.classes)))
        for cls in bank.classes:
            chunks.append(_pack_str(cls.class_id))
            chunks.append(struct.pack("<B", int(cls.split)))
            f = np.ascontiguousarray(cls.features, dtype="<f4")
            chunks.append(struct.pack("<I", f.shape[0]))
            chunks.append(f.tobytes())
    elif isinstance(bank, SemanticBank):
        chunks.append(_MAGIC_SEMANTICS)
        chunks.append(struct.pack("<III", FORMAT_VERSION, bank.dim, len(bank.entries)))
        for cid, vec in bank.entries.items():
            chunks.append(_pack_str(cid))
            chunks.append(np.ascontiguousarray(vec, dtype="<f4").tobytes())
    elif isinstance(bank, ActivationMapSet):
        chunks.append(_MAGIC_MAPS)
        chunks.append(struct.pack("<II", FORMAT_VERSION, len(bank.entries)))
        for (sid, cid), m in bank.entries.items():
            chunks.append(_pack_str(sid))
            chunks.append(_pack_str(cid))
            m = np.ascontiguousarray(m, dtype="<f4")
            chunks.append(struct.pack("<II", m.shape[0], m.shape[1]))
            chunks.append(m.tobytes())
    else:
        raise TypeError(f"not a bank: {type(bank)!r}")
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_bank(path):
    """Load a bank file, dispatching on magic bytes; validates before returning."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        raise BankFormatError(f"missing file: {path}") from None
    if len(data) < 4:
        raise BankFormatError(f"unrecognized format: {path} (too short)")
    r = _Reader(data, str(path))
    magic = r.take(4)
    if magic == _MAGIC_FEATURES:
        bank = _load_features(r)
    elif magic == _MAGIC_SEMANTICS:
        bank = _load_semantics(r)
    elif magic == _MAGIC_MAPS:
        bank = _load_maps(r)
    else:
        raise BankFormatError(f"unrecognized format: bad magic {magic!r} in {path}")
    if r.pos != len(data):
        raise BankFormatError(f"trailing bytes in {path} at offset {r.pos}")
    bank.validate()
    return bank


def _check_version(r: _Reader):
    version = r.u32()
    if version != FORMAT_VERSION:
        raise BankFormatError(
            f"unsupported format version {version} in {r.path}"
        )


def _load_features(r: _Reader) -> FeatureBank:
    _check_version(r)
    dim = r.u32()
    n_classes = r.u32()
    classes = []
    for _ in range(n_classes):
        cid = r.string()
        split_raw = r.u8()
        try:
            split = Split(split_raw)
        except ValueError:
            raise BankFormatError(
                f"invalid split byte {split_raw} for class {cid!r} in {r.path}"
            ) from None
        n_c = r.u32()
        rows = r.f32_array(n_c * dim).reshape(n_c, dim)
        classes.append(ClassFeatures(cid, split, rows))
    return FeatureBank(dim=dim, classes=classes)


def _load_semantics(r: _Reader) -> SemanticBank:
    _check_version(r)
    dim = r.u32()
    n_entries = r.u32()
    entries = {}
    for _ in range(n_entries):
        cid = r.string()
        entries[cid] = r.f32_array(dim)
    return SemanticBank(dim=dim, entries=entries)


def _load_maps(r: _Reader) -> ActivationMapSet:
    _check_version(r)
    n_entries = r.u32()
    entries = {}
    for _ in range(n_entries):
        sid = r.string()
        cid = r.string()
        h = r.u32()
        w = r.u32()
        entries[(sid, cid)] = r.f32_array(h * w).reshape(h, w)
    return ActivationMapSet(entries=entries)


def validate_pair(features: FeatureBank, semantics: SemanticBank) -> ValidationReport:
    """Cross-check a feature/semantic bank pair; problems are reported, not raised."""
    report = ValidationReport()
    for cls in features.classes:
        if cls.class_id not in semantics.entries:
            report.missing_semantics.append(cls.class_id)
        f = np.asarray(cls.features)
        if f.ndim != 2 or f.shape[1] != features.dim:
            report.dimension_mismatches.append(cls.class_id)
        if np.any(f < 0):
            report.negative_features.append(cls.class_id)
    for cid, vec in semantics.entries.items():
        if np.asarray(vec).shape != (semantics.dim,):
            report.dimension_mismatches.append(cid)
    return report
