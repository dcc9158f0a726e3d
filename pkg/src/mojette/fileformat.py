"""Self-describing projection files (``*.mjec``).

Layout, all integers little-endian::

    magic "MJEC" | version u8 | flags u8 | n u8 | k u8 | W u16 | proj_index u8
    | p i16 | q u16 | P u32 | payload_len u64 | dirset n x i16 | header_crc u32
    | bins (bin_count * W bytes) | payload_crc u32

Both checksums are CRC-32 (IEEE, reflected), the header one over every
preceding header byte and the payload one over the bins.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Direction, Projection, b_min, bin_count, check_width
from .errors import CrcMismatch, FormatError

MAGIC = b"MJEC"
VERSION = 1
_FIXED = struct.Struct("<4sBBBBHBhHIQ")
_CRC = struct.Struct("<I")


@dataclass(frozen=True)
class ProjectionFileHeader:
    n: int
    k: int
    width: int
    proj_index: int
    p: int
    q: int
    P: int
    payload_len: int
    dirset: tuple
    version: int = VERSION
    flags: int = 0

    @property
    def direction(self) -> Direction:
        return Direction(self.p, self.q)

    @property
    def bin_count(self) -> int:
        return bin_count(self.direction, self.P, self.k)

    @property
    def payload_size(self) -> int:
        return self.bin_count * self.width

    @property
    def size(self) -> int:
        return _FIXED.size + 2 * self.n + _CRC.size

    def pack(self) -> bytes:
        body = _FIXED.pack(
            MAGIC, self.version, self.flags, self.n, self.k, self.width,
            self.proj_index, self.p, self.q, self.P, self.payload_len,
        ) + struct.pack(f"<{self.n}h", *self.dirset)
        return body + _CRC.pack(zlib.crc32(body))

    @classmethod
    def unpack(cls, buf: bytes, path=None) -> "ProjectionFileHeader":
        if len(buf) < _FIXED.size:
            raise FormatError(f"truncated header ({len(buf)} bytes)", path)
        magic, version, flags, n, k, width, idx, p, q, P, plen = _FIXED.unpack_from(buf)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}", path)
        end = _FIXED.size + 2 * n
        if len(buf) < end + _CRC.size:
            raise FormatError("truncated header", path)
        (crc,) = _CRC.unpack_from(buf, end)
        if zlib.crc32(buf[:end]) != crc:
            raise CrcMismatch("header checksum mismatch", path)
        if version != VERSION:
            raise FormatError(f"unsupported version {version}", path)
        dirset = struct.unpack_from(f"<{n}h", buf, _FIXED.size)
        hdr = cls(n, k, width, idx, p, q, P, plen, tuple(dirset), version, flags)
        hdr.validate(path)
        return hdr

    def validate(self, path=None):
        try:
            check_width(self.width)
            self.direction
        except ValueError as exc:
            raise FormatError(str(exc), path) from None
        if not 1 <= self.k <= self.n:
            raise FormatError(f"invalid code parameters n={self.n}, k={self.k}", path)
        if not 0 <= self.proj_index < self.n:
            raise FormatError(f"projection index {self.proj_index} out of range", path)
        if len(self.dirset) != self.n or self.dirset[self.proj_index] != self.p:
            raise FormatError("direction set does not contain this projection's p", path)
        if self.q != 1 or self.P < 1 or self.payload_len < 1:
            raise FormatError("invalid geometry fields", path)
        if self.payload_len > self.P * self.k * self.width:
            raise FormatError("payload length exceeds grid capacity", path)


def serialize(header: ProjectionFileHeader, bins: np.ndarray) -> bytes:
    payload = np.ascontiguousarray(bins, np.uint8).tobytes()
    if len(payload) != header.payload_size:
        raise ValueError(f"bins hold {len(payload)} bytes, header expects {header.payload_size}")
    return header.pack() + payload + _CRC.pack(zlib.crc32(payload))


def parse(buf: bytes, path=None) -> tuple[ProjectionFileHeader, Projection]:
    hdr = ProjectionFileHeader.unpack(buf, path)
    start = hdr.size
    end = start + hdr.payload_size
    if len(buf) < end + _CRC.size:
        raise FormatError(f"truncated payload ({len(buf)} of {end + _CRC.size} bytes)", path)
    if len(buf) > end + _CRC.size:
        raise FormatError(f"{len(buf) - end - _CRC.size} trailing bytes", path)
    payload = buf[start:end]
    (crc,) = _CRC.unpack_from(buf, end)
    if zlib.crc32(payload) != crc:
        raise CrcMismatch("payload checksum mismatch", path)
    bins = np.frombuffer(payload, np.uint8).reshape(hdr.bin_count, hdr.width).copy()
    return hdr, Projection(hdr.direction, bins, b_min(hdr.direction, hdr.P, hdr.k))


def write_file(path, header: ProjectionFileHeader, bins) -> None:
    Path(path).write_bytes(serialize(header, bins))


def read_file(path) -> tuple[ProjectionFileHeader, Projection]:
    return parse(Path(path).read_bytes(), path)
