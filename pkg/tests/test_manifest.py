import pytest

from speechmotion.errors import FormatError
from speechmotion.manifest import file_digest, read_manifest, write_manifest


def test_digest_depends_only_on_content(tmp_path):
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    a.write_bytes(b"payload")
    b.write_bytes(b"payload")
    assert file_digest(a) == file_digest(b)
    assert len(file_digest(a)) == 16
    b.write_bytes(b"payload2")
    assert file_digest(a) != file_digest(b)


def test_manifest_round_trip_and_stable_bytes(tmp_path):
    src = tmp_path / "input.txt"
    src.write_text("x")
    out = tmp_path / "output.txt"
    out.write_text("y")
    p1 = write_manifest(tmp_path / "m1.json", "stage-a", "abc123", {"in": src}, {"out": out})
    p2 = write_manifest(tmp_path / "m2.json", "stage-a", "abc123", {"in": src}, {"out": out})
    assert p1.read_bytes() == p2.read_bytes()
    back = read_manifest(p1)
    assert back["stage"] == "stage-a"
    assert back["inputs"]["in"] == file_digest(src)
    assert back["outputs"]["out"] == file_digest(out)


def test_read_manifest_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(FormatError):
        read_manifest(bad)
    partial = tmp_path / "partial.json"
    partial.write_text('{"stage": "x"}')
    with pytest.raises(FormatError, match="missing field"):
        read_manifest(partial)
    with pytest.raises(FormatError):
        read_manifest(tmp_path / "absent.json")
