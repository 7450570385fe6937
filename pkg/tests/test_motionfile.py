import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from speechmotion.errors import FormatError
from speechmotion.motion import BODY_DIM, FACE_DIM, HAND_DIM, MotionSequence, SpeakerId
from speechmotion.motionfile import MAGIC, read_blocks, read_motion, write_blocks, write_motion


def blocks(t=10, seed=0):
    rng = np.random.default_rng(seed)
    return {
        "a": rng.normal(size=(t, 4)).astype(np.float32),
        "b": rng.normal(size=(t, 7)).astype(np.float32),
    }


def test_round_trip_bit_exact(tmp_path):
    data = blocks(17)
    data["a"][0, 0] = -0.0
    data["a"][1, 1] = np.float32(1e-38)
    path = write_blocks(tmp_path / "x.hm1", data, 30.0, {"k": "v"})
    out, fps, meta = read_blocks(path)
    assert fps == 30.0
    assert meta == {"k": "v"}
    for name in data:
        assert out[name].dtype == np.float32
        assert out[name].tobytes() == data[name].tobytes()


def test_write_is_deterministic(tmp_path):
    data = blocks(9)
    p1 = write_blocks(tmp_path / "1.hm1", data, 30.0, {"z": 1, "a": 2})
    p2 = write_blocks(tmp_path / "2.hm1", data, 30.0, {"a": 2, "z": 1})
    assert p1.read_bytes() == p2.read_bytes()


def test_truncated_payload_names_byte_counts(tmp_path):
    path = write_blocks(tmp_path / "x.hm1", blocks(), 30.0)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(FormatError, match=r"expected \d+ bytes, file has \d+"):
        read_blocks(path)


def test_truncated_header_rejected(tmp_path):
    path = write_blocks(tmp_path / "x.hm1", blocks(), 30.0)
    raw = path.read_bytes()
    path.write_bytes(raw[:20])
    with pytest.raises(FormatError, match="truncated header"):
        read_blocks(path)
    path.write_bytes(raw[:10])
    with pytest.raises(FormatError, match="too short"):
        read_blocks(path)


def test_bad_magic_rejected(tmp_path):
    path = write_blocks(tmp_path / "x.hm1", blocks(), 30.0)
    raw = bytearray(path.read_bytes())
    raw[: len(MAGIC)] = MAGIC[::-1]
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="bad magic"):
        read_blocks(path)


def test_byte_swapped_header_length_rejected(tmp_path):
    path = write_blocks(tmp_path / "x.hm1", blocks(), 30.0)
    raw = bytearray(path.read_bytes())
    # a big-endian writer would flip the header-length field
    (n,) = struct.unpack_from("<I", raw, len(MAGIC))
    struct.pack_into(">I", raw, len(MAGIC), n)
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        read_blocks(path)


def test_corrupt_header_json(tmp_path):
    path = write_blocks(tmp_path / "x.hm1", blocks(), 30.0)
    raw = bytearray(path.read_bytes())
    raw[len(MAGIC) + 4] = ord("!")
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="JSON"):
        read_blocks(path)


def test_write_rejects_mismatched_frames(tmp_path):
    data = {"a": np.zeros((5, 2), dtype=np.float32), "b": np.zeros((6, 2), dtype=np.float32)}
    with pytest.raises(FormatError, match="frames"):
        write_blocks(tmp_path / "x.hm1", data, 30.0)
    with pytest.raises(FormatError):
        write_blocks(tmp_path / "y.hm1", {}, 30.0)
    with pytest.raises(FormatError):
        write_blocks(tmp_path / "z.hm1", {"a": np.zeros(5, dtype=np.float32)}, 30.0)


def motion(t=20):
    rng = np.random.default_rng(3)
    return MotionSequence(
        rng.normal(size=(t, FACE_DIM)),
        rng.normal(size=(t, BODY_DIM)),
        rng.normal(size=(t, HAND_DIM)),
    )


def test_motion_round_trip(tmp_path):
    m = motion()
    speaker = SpeakerId(1, 3)
    path = write_motion(tmp_path / "m.hm1", m, speaker, {"note": "x"})
    m2, sp2, extras = read_motion(path)
    assert np.array_equal(m2.face, m.face)
    assert np.array_equal(m2.body, m.body)
    assert np.array_equal(m2.hand, m.hand)
    assert sp2 == speaker
    assert extras == {"note": "x"}


def test_read_motion_requires_all_parts(tmp_path):
    path = write_blocks(
        tmp_path / "m.hm1",
        {"face": np.zeros((4, FACE_DIM), dtype=np.float32)},
        30.0,
        {"speaker_index": 0, "n_speakers": 1},
    )
    with pytest.raises(FormatError, match="missing part"):
        read_motion(path)


def test_read_motion_checks_dims(tmp_path):
    path = write_blocks(
        tmp_path / "m.hm1",
        {
            "face": np.zeros((4, FACE_DIM), dtype=np.float32),
            "body": np.zeros((4, BODY_DIM + 1), dtype=np.float32),
            "hand": np.zeros((4, HAND_DIM), dtype=np.float32),
        },
        30.0,
        {"speaker_index": 0, "n_speakers": 1},
    )
    with pytest.raises(FormatError, match="dim"):
        read_motion(path)


def test_read_motion_requires_speaker_meta(tmp_path):
    m = motion(4)
    path = write_blocks(
        tmp_path / "m.hm1", {"face": m.face, "body": m.body, "hand": m.hand}, 30.0
    )
    with pytest.raises(FormatError, match="speaker"):
        read_motion(path)


@settings(
    max_examples=20, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
@given(
    t=st.integers(min_value=1, max_value=50),
    dims=st.lists(st.integers(1, 16), min_size=1, max_size=4),
    seed=st.integers(0, 1000),
)
def test_round_trip_any_shape(tmp_path, t, dims, seed):
    rng = np.random.default_rng(seed)
    data = {f"p{i}": rng.normal(size=(t, d)).astype(np.float32) for i, d in enumerate(dims)}
    path = write_blocks(tmp_path / f"{seed}.hm1", data, 25.0, {"seed": seed})
    out, fps, meta = read_blocks(path)
    assert fps == 25.0
    assert meta["seed"] == seed
    for name in data:
        assert np.array_equal(out[name], data[name])
