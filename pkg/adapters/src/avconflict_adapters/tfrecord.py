"""TFRecord container reading and writing.

Record layout: little-endian uint64 length, masked CRC32C of the length
bytes, payload, masked CRC32C of the payload. The CRC is the Castagnoli
polynomial, table-driven, with TensorFlow's rotate-and-add masking.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterator, Sequence, Union

_CRC_TABLE = []
_POLY = 0x82F63B78  # reflected Castagnoli polynomial
for _index in range(256):
    _crc = _index
    for _ in range(8):
        _crc = (_crc >> 1) ^ _POLY if _crc & 1 else _crc >> 1
    _CRC_TABLE.append(_crc)

_MASK_DELTA = 0xA282EAD8


class TfRecordError(ValueError):
    pass


def crc32c(data: bytes) -> int:
    crc = 0xFFFFFFFF
    for byte in data:
        crc = _CRC_TABLE[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFF


def masked_crc(data: bytes) -> int:
    crc = crc32c(data)
    return (((crc >> 15) | (crc << 17)) + _MASK_DELTA) & 0xFFFFFFFF


def write_tfrecord(records: Sequence[bytes], path: Union[str, Path]) -> None:
    with Path(path).open("wb") as fh:
        for record in records:
            header = struct.pack("<Q", len(record))
            fh.write(header)
            fh.write(struct.pack("<I", masked_crc(header)))
            fh.write(record)
            fh.write(struct.pack("<I", masked_crc(record)))


def read_tfrecord(path: Union[str, Path]) -> Iterator[bytes]:
    data = Path(path).read_bytes()
    pos = 0
    index = 0
    while pos < len(data):
        if pos + 12 > len(data):
            raise TfRecordError(f"record {index}: truncated header")
        (length,) = struct.unpack_from("<Q", data, pos)
        (length_crc,) = struct.unpack_from("<I", data, pos + 8)
        if masked_crc(data[pos:pos + 8]) != length_crc:
            raise TfRecordError(f"record {index}: length checksum mismatch")
        pos += 12
        if pos + length + 4 > len(data):
            raise TfRecordError(f"record {index}: truncated payload")
        payload = data[pos:pos + length]
        (payload_crc,) = struct.unpack_from("<I", data, pos + length)
        if masked_crc(payload) != payload_crc:
            raise TfRecordError(f"record {index}: payload checksum mismatch")
        pos += length + 4
        index += 1
        yield payload
