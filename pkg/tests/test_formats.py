import gzip
import struct

import numpy as np
import pytest

from twodpca.errors import FormatError
from twodpca.formats import (read_idx_images, read_idx_labels, read_pgm, read_snapshot,
                             write_idx_images, write_idx_labels, write_pgm, write_snapshot)


def test_idx_round_trip_plain_and_gzip(tmp_path, rng):
    images = rng.integers(0, 256, (3, 4, 5), dtype=np.uint8)
    labels = np.array([7, 0, 3], dtype=np.uint8)
    for compress in (False, True):
        ip, lp = tmp_path / f"i{compress}", tmp_path / f"l{compress}"
        write_idx_images(ip, images, compress)
        write_idx_labels(lp, labels, compress)
        np.testing.assert_array_equal(read_idx_images(ip), images)
        np.testing.assert_array_equal(read_idx_labels(lp), labels)


def test_idx_header_layout(tmp_path):
    write_idx_images(tmp_path / "a", np.zeros((2, 3, 4), np.uint8))
    raw = (tmp_path / "a").read_bytes()
    assert struct.unpack(">4I", raw[:16]) == (0x803, 2, 3, 4)
    assert len(raw) == 16 + 24


def test_idx_gzip_is_reproducible(tmp_path):
    write_idx_labels(tmp_path / "a", [1, 2], compress=True)
    write_idx_labels(tmp_path / "b", [1, 2], compress=True)
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_idx_bad_magic_reports_offset(tmp_path):
    p = tmp_path / "x"
    p.write_bytes(struct.pack(">4I", 0x801, 1, 1, 1) + b"\x00")
    with pytest.raises(FormatError, match="@ byte 0"):
        read_idx_images(p)


def test_idx_truncated_payload(tmp_path):
    p = tmp_path / "x"
    p.write_bytes(struct.pack(">4I", 0x803, 2, 2, 2) + b"\x00" * 5)
    with pytest.raises(FormatError, match="@ byte 21"):
        read_idx_images(p)


def test_idx_trailing_bytes(tmp_path):
    p = tmp_path / "x"
    p.write_bytes(struct.pack(">2I", 0x801, 2) + b"\x01\x02\x03")
    with pytest.raises(FormatError, match="trailing"):
        read_idx_labels(p)


def test_idx_truncated_header(tmp_path):
    p = tmp_path / "x"
    p.write_bytes(b"\x00\x00")
    with pytest.raises(FormatError):
        read_idx_labels(p)


def test_idx_corrupt_gzip(tmp_path):
    p = tmp_path / "x.gz"
    p.write_bytes(gzip.compress(struct.pack(">2I", 0x801, 1) + b"\x01")[:-6])
    with pytest.raises(FormatError):
        read_idx_labels(p)


def test_pgm_p2_with_comments(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_text("P2\n# made by hand\n3 2\n# max\n15\n0 1 2\n13 14 15\n")
    pixels, maxval = read_pgm(p)
    assert maxval == 15
    np.testing.assert_array_equal(pixels, [[0, 1, 2], [13, 14, 15]])


def test_pgm_p5_round_trip(tmp_path):
    img = np.array([[0.0, 128 / 255], [1.0, 0.5]])
    write_pgm(tmp_path / "a.pgm", img)
    pixels, maxval = read_pgm(tmp_path / "a.pgm")
    assert maxval == 255
    np.testing.assert_array_equal(pixels, [[0, 128], [255, 128]])


def test_pgm_write_clamps(tmp_path):
    write_pgm(tmp_path / "a.pgm", np.array([[-0.3, 1.7]]))
    np.testing.assert_array_equal(read_pgm(tmp_path / "a.pgm")[0], [[0, 255]])


@pytest.mark.parametrize("content, msg", [
    (b"\x89PNG\r\n\x1a\n", "unsupported"),
    (b"P5\n2 2\n255\n\x00", "truncated raster"),
    (b"P2\n2 1\n10\n3 11\n", "exceeds maxval"),
    (b"P2\n2 1\n", "truncated PGM header"),
    (b"P5\n1 1\n65535\n\x00\x00", "maxval"),
])
def test_pgm_rejects(tmp_path, content, msg):
    p = tmp_path / "bad.pgm"
    p.write_bytes(content)
    with pytest.raises(FormatError, match=msg):
        read_pgm(p)


def test_snapshot_round_trip_is_exact(tmp_path, rng):
    images = rng.standard_normal((4, 2, 3))
    write_snapshot(tmp_path / "s.csv", images, [0, 0, 1, 1], ("cat", "dog"))
    back, names = read_snapshot(tmp_path / "s.csv")
    assert back.tobytes() == images.tobytes()
    assert names == ["cat", "cat", "dog", "dog"]


def test_snapshot_shape_mismatch(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("label,h,w,p_0,p_1\na,1,2,0.1,0.2\nb,2,1,0.1,0.2\n")
    with pytest.raises(FormatError, match="row 2"):
        read_snapshot(p)
