"""Android binary XML (compiled manifest) decoder.

Walks the chunk stream of a RES_XML document: string pool, optional
resource map, namespace chunks, start/end element chunks, CDATA. Styles
and resource-map contents are skipped; attribute typed values are rendered
to strings. Output is a plain element tree, enough for manifest semantics.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import AxmlCorrupt

RES_XML_TYPE = 0x0003
RES_STRING_POOL_TYPE = 0x0001
RES_XML_RESOURCE_MAP_TYPE = 0x0180
RES_XML_START_NAMESPACE = 0x0100
RES_XML_END_NAMESPACE = 0x0101
RES_XML_START_ELEMENT = 0x0102
RES_XML_END_ELEMENT = 0x0103
RES_XML_CDATA = 0x0104

_UTF8_FLAG = 0x0100
_NO_INDEX = 0xFFFFFFFF

# Typed-value data types we render specially
TYPE_REFERENCE = 0x01
TYPE_STRING = 0x03
TYPE_INT_DEC = 0x10
TYPE_INT_HEX = 0x11
TYPE_INT_BOOLEAN = 0x12


@dataclass(frozen=True)
class XmlAttr:
    namespace: str | None
    name: str
    value: str


@dataclass
class XmlNode:
    name: str
    namespace: str | None = None
    attributes: list[XmlAttr] = field(default_factory=list)
    children: list["XmlNode"] = field(default_factory=list)


@dataclass
class XmlTree:
    root: XmlNode


def _u16(buf: bytes, off: int) -> int:
    return struct.unpack_from("<H", buf, off)[0]


def _u32(buf: bytes, off: int) -> int:
    return struct.unpack_from("<I", buf, off)[0]


class _StringPool:
    def __init__(self, chunk: bytes, header_size: int):
        if len(chunk) < 28:
            raise AxmlCorrupt("string pool chunk too small")
        self.count = _u32(chunk, 8)
        flags = _u32(chunk, 16)
        self.is_utf8 = bool(flags & _UTF8_FLAG)
        self.strings_start = _u32(chunk, 20)
        offsets_base = header_size
        if offsets_base + 4 * self.count > len(chunk):
            raise AxmlCorrupt("string pool offset table overruns chunk")
        self._offsets = [
            _u32(chunk, offsets_base + 4 * i) for i in range(self.count)
        ]
        self._chunk = chunk

    def get(self, index: int) -> str:
        if index >= self.count:
            raise AxmlCorrupt(f"string index {index} out of pool bounds")
        pos = self.strings_start + self._offsets[index]
        chunk = self._chunk
        if pos >= len(chunk):
            raise AxmlCorrupt(f"string data for index {index} out of bounds")
        if self.is_utf8:
            # Two lengths (utf16 units, then bytes), each 1 or 2 bytes with
            # the high bit extending into a second byte.
            _, pos = self._len8(chunk, pos)
            byte_len, pos = self._len8(chunk, pos)
            end = pos + byte_len
            if end > len(chunk):
                raise AxmlCorrupt("utf-8 string data overruns chunk")
            return chunk[pos:end].decode("utf-8", errors="replace")
        # UTF-16LE: length in u16 units, high bit extends to 4 bytes.
        if pos + 2 > len(chunk):
            raise AxmlCorrupt("utf-16 string length overruns chunk")
        length = _u16(chunk, pos)
        pos += 2
        if length & 0x8000:
            if pos + 2 > len(chunk):
                raise AxmlCorrupt("utf-16 string length overruns chunk")
            length = ((length & 0x7FFF) << 16) | _u16(chunk, pos)
            pos += 2
        end = pos + 2 * length
        if end > len(chunk):
            raise AxmlCorrupt("utf-16 string data overruns chunk")
        return chunk[pos:end].decode("utf-16-le", errors="replace")

    def get_optional(self, index: int) -> str | None:
        return None if index == _NO_INDEX else self.get(index)

    @staticmethod
    def _len8(chunk: bytes, pos: int) -> tuple[int, int]:
        if pos >= len(chunk):
            raise AxmlCorrupt("utf-8 string length overruns chunk")
        length = chunk[pos]
        pos += 1
        if length & 0x80:
            if pos >= len(chunk):
                raise AxmlCorrupt("utf-8 string length overruns chunk")
            length = ((length & 0x7F) << 8) | chunk[pos]
            pos += 1
        return length, pos


def _render_value(pool: _StringPool, data_type: int, data: int) -> str:
    if data_type == TYPE_STRING:
        return pool.get(data)
    if data_type == TYPE_INT_DEC:
        return str(struct.unpack("<i", struct.pack("<I", data))[0])
    if data_type == TYPE_INT_HEX:
        return f"0x{data:x}"
    if data_type == TYPE_INT_BOOLEAN:
        return "true" if data else "false"
    if data_type == TYPE_REFERENCE:
        return f"@0x{data:08x}"
    return str(data)


def decode_axml(buf: bytes) -> XmlTree:
    """Decode a compiled AndroidManifest.xml into an XmlTree.

    Raises AxmlCorrupt on bad magic, chunk overruns, string indices out of
    pool bounds, or unbalanced element nesting.
    """
    if len(buf) < 8:
        raise AxmlCorrupt("input shorter than a chunk header")
    doc_type = _u16(buf, 0)
    doc_header_size = _u16(buf, 2)
    doc_size = _u32(buf, 4)
    if doc_type != RES_XML_TYPE:
        raise AxmlCorrupt(f"not a binary xml document (type {doc_type:#06x})")
    if doc_size > len(buf) or doc_header_size < 8 or doc_header_size > doc_size:
        raise AxmlCorrupt("document chunk size out of bounds")

    pool: _StringPool | None = None
    root: XmlNode | None = None
    stack: list[XmlNode] = []
    pos = doc_header_size

    while pos + 8 <= doc_size:
        chunk_type = _u16(buf, pos)
        header_size = _u16(buf, pos + 2)
        chunk_size = _u32(buf, pos + 4)
        if chunk_size < header_size or header_size < 8:
            raise AxmlCorrupt(f"bad chunk header at {pos:#x}")
        if pos + chunk_size > doc_size:
            raise AxmlCorrupt(f"chunk at {pos:#x} overruns buffer")
        chunk = buf[pos:pos + chunk_size]

        if chunk_type == RES_STRING_POOL_TYPE:
            pool = _StringPool(chunk, header_size)
        elif chunk_type == RES_XML_START_ELEMENT:
            if pool is None:
                raise AxmlCorrupt("element chunk before string pool")
            node = _parse_start_element(chunk, header_size, pool)
            if stack:
                stack[-1].children.append(node)
            elif root is None:
                root = node
            else:
                raise AxmlCorrupt("multiple root elements")
            stack.append(node)
        elif chunk_type == RES_XML_END_ELEMENT:
            if not stack:
                raise AxmlCorrupt("end element without matching start")
            stack.pop()
        elif chunk_type in (RES_XML_START_NAMESPACE, RES_XML_END_NAMESPACE,
                            RES_XML_RESOURCE_MAP_TYPE, RES_XML_CDATA):
            pass
        # Unknown chunk types are skipped; their size still advances the walk.
        pos += chunk_size

    if stack:
        raise AxmlCorrupt(f"{len(stack)} unclosed element(s) at end of document")
    if root is None:
        raise AxmlCorrupt("document has no root element")
    return XmlTree(root=root)


def _parse_start_element(chunk: bytes, header_size: int,
                         pool: _StringPool) -> XmlNode:
    ext = header_size  # attrExt sits right after the node header
    if ext + 20 > len(chunk):
        raise AxmlCorrupt("start element chunk too small")
    ns_idx = _u32(chunk, ext)
    name_idx = _u32(chunk, ext + 4)
    attr_start = _u16(chunk, ext + 8)
    attr_size = _u16(chunk, ext + 10)
    attr_count = _u16(chunk, ext + 12)
    if attr_size < 20:
        raise AxmlCorrupt(f"attribute record size {attr_size} too small")

    node = XmlNode(name=pool.get(name_idx),
                   namespace=pool.get_optional(ns_idx))
    base = ext + attr_start
    for i in range(attr_count):
        off = base + i * attr_size
        if off + 20 > len(chunk):
            raise AxmlCorrupt("attribute record overruns chunk")
        a_ns = _u32(chunk, off)
        a_name = _u32(chunk, off + 4)
        # raw_value at off+8 is ignored; the typed value is authoritative
        data_type = chunk[off + 15]
        data = _u32(chunk, off + 16)
        node.attributes.append(XmlAttr(
            namespace=pool.get_optional(a_ns),
            name=pool.get(a_name),
            value=_render_value(pool, data_type, data),
        ))
    return node
