"""Classic ZIP container reader for APK ingestion.

Deliberately not backed by :mod:`zipfile` so that the test suite can use the
standard library as an independent archiver/extractor oracle. Scope is the
classic format only: no ZIP64, no encryption, methods 0 (stored) and
8 (deflate). Every entry's CRC-32 is verified at parse time.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass

from .errors import ZipCorrupt

EOCD_SIG = 0x06054B50
CENTRAL_SIG = 0x02014B50
LOCAL_SIG = 0x04034B50

EOCD_LEN = 22
CENTRAL_LEN = 46
LOCAL_LEN = 30

# EOCD comment is at most 64 KiB, so the record starts within the last
# 64 KiB + 22 bytes of the file.
_EOCD_SEARCH_LIMIT = 0xFFFF + EOCD_LEN

_UTF8_NAME_FLAG = 0x0800


class Compression(enum.Enum):
    STORED = 0
    DEFLATE = 8


@dataclass(frozen=True)
class ZipEntry:
    name: str
    uncompressed_size: int
    crc32: int
    method: Compression
    data: bytes


def _u16(buf: bytes, off: int) -> int:
    return struct.unpack_from("<H", buf, off)[0]


def _u32(buf: bytes, off: int) -> int:
    return struct.unpack_from("<I", buf, off)[0]


def _find_eocd(buf: bytes) -> int:
    """Return the offset of the end-of-central-directory record.

    Scans backward from EOF; accepts the latest candidate whose comment
    length is consistent with the file size (trailing garbage rejected).
    """
    start = max(0, len(buf) - _EOCD_SEARCH_LIMIT)
    pos = buf.rfind(b"PK\x05\x06", start)
    while pos >= start:
        if pos + EOCD_LEN <= len(buf):
            comment_len = _u16(buf, pos + 20)
            if pos + EOCD_LEN + comment_len == len(buf):
                return pos
        pos = buf.rfind(b"PK\x05\x06", start, pos)
    raise ZipCorrupt("end-of-central-directory record not found")


def _entry_data(buf: bytes, name: str, local_off: int, method: int,
                comp_size: int, uncomp_size: int, crc: int) -> bytes:
    if local_off + LOCAL_LEN > len(buf):
        raise ZipCorrupt(f"{name}: local header out of bounds")
    if _u32(buf, local_off) != LOCAL_SIG:
        raise ZipCorrupt(f"{name}: bad local header signature")
    name_len = _u16(buf, local_off + 26)
    extra_len = _u16(buf, local_off + 28)
    data_off = local_off + LOCAL_LEN + name_len + extra_len
    if data_off + comp_size > len(buf):
        raise ZipCorrupt(f"{name}: entry data out of bounds")
    raw = buf[data_off:data_off + comp_size]

    if method == Compression.STORED.value:
        data = raw
    elif method == Compression.DEFLATE.value:
        try:
            inflater = zlib.decompressobj(-zlib.MAX_WBITS)
            data = inflater.decompress(raw) + inflater.flush()
        except zlib.error as exc:
            raise ZipCorrupt(f"{name}: deflate stream corrupt: {exc}") from exc
    else:
        raise ZipCorrupt(f"{name}: unsupported compression method {method}")

    if len(data) != uncomp_size:
        raise ZipCorrupt(
            f"{name}: size mismatch ({len(data)} != {uncomp_size})")
    if zlib.crc32(data) & 0xFFFFFFFF != crc:
        raise ZipCorrupt(f"{name}: crc32 mismatch")
    return data


def read_zip_entries(buf: bytes) -> list[ZipEntry]:
    """Parse all entries of a classic ZIP archive, in central-directory order.

    Raises ZipCorrupt on missing EOCD, signature mismatch, size or CRC
    mismatch, truncation, ZIP64 markers, or compression methods other
    than stored/deflate.
    """
    if not buf:
        raise ZipCorrupt("empty input")
    eocd = _find_eocd(buf)
    total_entries = _u16(buf, eocd + 10)
    cd_size = _u32(buf, eocd + 12)
    cd_off = _u32(buf, eocd + 16)
    if total_entries == 0xFFFF or cd_size == 0xFFFFFFFF or cd_off == 0xFFFFFFFF:
        raise ZipCorrupt("zip64 unsupported")
    if cd_off + cd_size > len(buf):
        raise ZipCorrupt("central directory out of bounds")

    entries: list[ZipEntry] = []
    pos = cd_off
    for _ in range(total_entries):
        if pos + CENTRAL_LEN > len(buf):
            raise ZipCorrupt("truncated central directory")
        if _u32(buf, pos) != CENTRAL_SIG:
            raise ZipCorrupt(f"bad central directory signature at {pos:#x}")
        flags = _u16(buf, pos + 8)
        method = _u16(buf, pos + 10)
        crc = _u32(buf, pos + 16)
        comp_size = _u32(buf, pos + 20)
        uncomp_size = _u32(buf, pos + 24)
        name_len = _u16(buf, pos + 28)
        extra_len = _u16(buf, pos + 30)
        comment_len = _u16(buf, pos + 32)
        local_off = _u32(buf, pos + 42)
        if comp_size == 0xFFFFFFFF or uncomp_size == 0xFFFFFFFF:
            raise ZipCorrupt("zip64 unsupported")
        raw_name = buf[pos + CENTRAL_LEN:pos + CENTRAL_LEN + name_len]
        if len(raw_name) != name_len:
            raise ZipCorrupt("truncated central directory entry name")
        encoding = "utf-8" if flags & _UTF8_NAME_FLAG else "cp437"
        name = raw_name.decode(encoding, errors="replace")

        data = _entry_data(buf, name, local_off, method,
                           comp_size, uncomp_size, crc)
        entries.append(ZipEntry(
            name=name,
            uncompressed_size=uncomp_size,
            crc32=crc,
            method=Compression(method),
            data=data,
        ))
        pos += CENTRAL_LEN + name_len + extra_len + comment_len
    return entries
