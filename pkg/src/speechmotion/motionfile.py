"""Binary container for framed float32 streams (motion clips, generator output).

Layout: 8-byte magic ``HMOTION1``, little-endian uint32 header length, UTF-8
JSON header, then row-major little-endian float32 payload of shape
(frames, sum of part dims). The header carries fps, frame count, named part
dims, and free-form metadata, so files are self-describing.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .motion import BODY_DIM, FACE_DIM, HAND_DIM, MotionSequence, SpeakerId

MAGIC = b"HMOTION1"
_MOTION_PARTS = (("face", FACE_DIM), ("body", BODY_DIM), ("hand", HAND_DIM))


def write_blocks(path, blocks, fps, meta=None):
    """Write named (T, D) float32 blocks sharing one time axis."""
    names = list(blocks)
    if not names:
        raise FormatError("no blocks to write")
    arrays = []
    frames = None
    for name in names:
        arr = np.ascontiguousarray(blocks[name], dtype="<f4")
        if arr.ndim != 2:
            raise FormatError(f"block {name!r} must be 2-D, got shape {arr.shape}")
        if frames is None:
            frames = arr.shape[0]
        elif arr.shape[0] != frames:
            raise FormatError(
                f"block {name!r} has {arr.shape[0]} frames, expected {frames}"
            )
        arrays.append(arr)
    header = {
        "fps": float(fps),
        "frames": int(frames),
        "parts": [{"name": n, "dim": int(a.shape[1])} for n, a in zip(names, arrays)],
        "meta": dict(meta or {}),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for arr in arrays:
            f.write(arr.tobytes())
    return path


def read_blocks(path):
    """Read back (blocks, fps, meta); payload round-trips bit-exactly."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 4:
        raise FormatError(f"file too short for header: {len(raw)} bytes")
    magic = raw[: len(MAGIC)]
    if magic != MAGIC:
        raise FormatError(
            f"bad magic {magic!r}: not a motion container (or written byte-swapped)"
        )
    (header_len,) = struct.unpack_from("<I", raw, len(MAGIC))
    header_end = len(MAGIC) + 4 + header_len
    if len(raw) < header_end:
        raise FormatError(
            f"truncated header: need {header_end} bytes, file has {len(raw)}"
        )
    try:
        header = json.loads(raw[len(MAGIC) + 4 : header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"header is not valid JSON: {exc}") from exc
    try:
        fps = float(header["fps"])
        frames = int(header["frames"])
        parts = [(str(p["name"]), int(p["dim"])) for p in header["parts"]]
        meta = dict(header.get("meta", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed header fields: {exc}") from exc
    total_dim = sum(d for _, d in parts)
    expected = header_end + 4 * frames * total_dim
    if len(raw) != expected:
        raise FormatError(
            f"payload size mismatch: expected {expected} bytes, file has {len(raw)}"
        )
    flat = np.frombuffer(raw, dtype="<f4", offset=header_end)
    blocks = {}
    offset = 0
    for name, dim in parts:
        count = frames * dim
        blocks[name] = flat[offset : offset + count].reshape(frames, dim).copy()
        offset += count
    return blocks, fps, meta


def write_motion(path, m: MotionSequence, speaker: SpeakerId, extras=None):
    meta = dict(extras or {})
    meta["speaker_index"] = speaker.index
    meta["n_speakers"] = speaker.n_speakers
    blocks = {"face": m.face, "body": m.body, "hand": m.hand}
    return write_blocks(path, blocks, m.fps, meta)


def read_motion(path):
    blocks, fps, meta = read_blocks(path)
    for name, dim in _MOTION_PARTS:
        if name not in blocks:
            raise FormatError(f"missing part {name!r}")
        if blocks[name].shape[1] != dim:
            raise FormatError(
                f"part {name!r} has dim {blocks[name].shape[1]}, expected {dim}"
            )
    try:
        speaker = SpeakerId(int(meta.pop("speaker_index")), int(meta.pop("n_speakers")))
    except KeyError as exc:
        raise FormatError(f"missing speaker field {exc} in header meta") from exc
    motion = MotionSequence(blocks["face"], blocks["body"], blocks["hand"], fps)
    return motion, speaker, meta
