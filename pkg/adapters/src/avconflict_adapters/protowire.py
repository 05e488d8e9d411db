"""Minimal protobuf wire-format codec.

Supports the subset needed for the motion-dataset scenario messages: varint,
64-bit, 32-bit and length-delimited fields, packed and unpacked repeated
scalars. Field semantics live in the schema modules; this layer only moves
bytes.
"""
from __future__ import annotations

import struct
from typing import Iterator, List, Tuple, Union

WIRETYPE_VARINT = 0
WIRETYPE_64BIT = 1
WIRETYPE_LENGTH = 2
WIRETYPE_32BIT = 5


class WireError(ValueError):
    pass


def encode_varint(value: int) -> bytes:
    if value < 0:
        value &= (1 << 64) - 1
    out = bytearray()
    while True:
        bits = value & 0x7F
        value >>= 7
        if value:
            out.append(bits | 0x80)
        else:
            out.append(bits)
            return bytes(out)


def decode_varint(buf: bytes, pos: int) -> Tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise WireError("truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise WireError("varint too long")


def tag(field_number: int, wire_type: int) -> bytes:
    return encode_varint((field_number << 3) | wire_type)


def field_varint(field_number: int, value: int) -> bytes:
    return tag(field_number, WIRETYPE_VARINT) + encode_varint(value)


def field_double(field_number: int, value: float) -> bytes:
    return tag(field_number, WIRETYPE_64BIT) + struct.pack("<d", value)


def field_float(field_number: int, value: float) -> bytes:
    return tag(field_number, WIRETYPE_32BIT) + struct.pack("<f", value)


def field_bytes(field_number: int, value: bytes) -> bytes:
    return tag(field_number, WIRETYPE_LENGTH) + encode_varint(len(value)) + value


def field_string(field_number: int, value: str) -> bytes:
    return field_bytes(field_number, value.encode("utf-8"))


def field_packed_doubles(field_number: int, values) -> bytes:
    return field_bytes(field_number, b"".join(struct.pack("<d", v) for v in values))


def iter_fields(buf: bytes) -> Iterator[Tuple[int, int, Union[int, bytes]]]:
    """Yield (field_number, wire_type, payload) triples.

    Varints come back as ints; 32/64-bit and length-delimited fields as bytes.
    """
    pos = 0
    while pos < len(buf):
        key, pos = decode_varint(buf, pos)
        field_number = key >> 3
        wire_type = key & 0x7
        if wire_type == WIRETYPE_VARINT:
            value, pos = decode_varint(buf, pos)
            yield field_number, wire_type, value
        elif wire_type == WIRETYPE_64BIT:
            if pos + 8 > len(buf):
                raise WireError("truncated 64-bit field")
            yield field_number, wire_type, buf[pos:pos + 8]
            pos += 8
        elif wire_type == WIRETYPE_LENGTH:
            length, pos = decode_varint(buf, pos)
            if pos + length > len(buf):
                raise WireError("truncated length-delimited field")
            yield field_number, wire_type, buf[pos:pos + length]
            pos += length
        elif wire_type == WIRETYPE_32BIT:
            if pos + 4 > len(buf):
                raise WireError("truncated 32-bit field")
            yield field_number, wire_type, buf[pos:pos + 4]
            pos += 4
        else:
            raise WireError(f"unsupported wire type {wire_type}")


def as_double(payload: Union[int, bytes]) -> float:
    return struct.unpack("<d", payload)[0]


def as_float(payload: Union[int, bytes]) -> float:
    return struct.unpack("<f", payload)[0]


def unpack_doubles(payload: bytes) -> List[float]:
    if len(payload) % 8:
        raise WireError("packed double payload not a multiple of 8 bytes")
    return list(struct.unpack(f"<{len(payload) // 8}d", payload))


def signed(value: int, bits: int = 64) -> int:
    """Interpret a decoded varint as a signed two's-complement integer."""
    if value >= 1 << (bits - 1):
        value -= 1 << bits
    return value
