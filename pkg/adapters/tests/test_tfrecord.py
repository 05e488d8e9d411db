import pytest

from avconflict_adapters.tfrecord import (
    TfRecordError,
    crc32c,
    masked_crc,
    read_tfrecord,
    write_tfrecord,
)


def test_crc32c_check_value():
    # standard Castagnoli check vector
    assert crc32c(b"123456789") == 0xE3069283


def test_crc32c_empty():
    assert crc32c(b"") == 0


def test_masked_crc_differs_from_raw():
    data = b"payload"
    assert masked_crc(data) != crc32c(data)


def test_roundtrip(tmp_path):
    records = [b"first", b"", b"x" * 1000]
    path = tmp_path / "t.tfrecord"
    write_tfrecord(records, path)
    assert list(read_tfrecord(path)) == records


def test_corruption_detected(tmp_path):
    path = tmp_path / "t.tfrecord"
    write_tfrecord([b"hello world"], path)
    raw = bytearray(path.read_bytes())
    raw[14] ^= 0xFF  # flip a payload byte
    path.write_bytes(bytes(raw))
    with pytest.raises(TfRecordError, match="checksum"):
        list(read_tfrecord(path))


def test_truncation_detected(tmp_path):
    path = tmp_path / "t.tfrecord"
    write_tfrecord([b"hello world"], path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(TfRecordError, match="truncated"):
        list(read_tfrecord(path))
