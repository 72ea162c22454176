import numpy as np
import struct

from promptforge.numerics.rng import RngStream
from promptforge.numerics.tenio import (
    read_checkpoint,
    read_tensor,
    tensors_digest,
    write_checkpoint,
    write_tensor,
)


def test_tensor_roundtrip(tmp_path):
    arr = RngStream(3, "io").sample_gaussian((4, 7, 2))
    path = tmp_path / "x.ten"
    write_tensor(path, arr)
    back = read_tensor(path)
    assert back.shape == arr.shape
    assert np.array_equal(back, arr)


def test_tensor_header_layout(tmp_path):
    arr = np.arange(6, dtype=np.float64).reshape(2, 3)
    path = tmp_path / "x.ten"
    write_tensor(path, arr)
    raw = path.read_bytes()
    rank = struct.unpack("<I", raw[:4])[0]
    extents = struct.unpack("<2I", raw[4:12])
    assert rank == 2
    assert extents == (2, 3)
    payload = np.frombuffer(raw[12:], dtype="<f8")
    assert np.array_equal(payload.reshape(2, 3), arr)


def test_checkpoint_roundtrip(tmp_path):
    stream = RngStream(5, "ckpt")
    tensors = {"w1": stream.sample_gaussian((3, 4)), "b1": stream.sample_gaussian((4,))}
    header = {"kind": "test", "dim": 4, "scale": 2.5}
    path = tmp_path / "model.ckpt"
    write_checkpoint(path, header, tensors)
    header2, tensors2 = read_checkpoint(path)
    assert header2 == header
    assert set(tensors2) == set(tensors)
    for name in tensors:
        assert np.array_equal(tensors[name], tensors2[name])


def test_digest_detects_mutation():
    stream = RngStream(6, "digest")
    tensors = {"w": stream.sample_gaussian((5, 5))}
    before = tensors_digest(tensors)
    assert before == tensors_digest({"w": tensors["w"].copy()})
    mutated = {"w": tensors["w"] + 1e-12}
    assert before != tensors_digest(mutated)
