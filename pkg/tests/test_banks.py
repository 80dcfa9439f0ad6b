import numpy as np
import pytest

from dualhal.banks import (
    ActivationMapSet,
    BankFormatError,
    BankValidationError,
    ClassFeatures,
    FeatureBank,
    SemanticBank,
    Split,
    load_bank,
    validate_pair,
    write_bank,
)
from dualhal.synthetic import SyntheticSpec, generate


def tiny_bank():
    return FeatureBank(
        dim=2,
        classes=[ClassFeatures("a", Split.BASE, np.array([[1.0, 2.0]], dtype=np.float32))],
    )


def test_feature_roundtrip_tiny(tmp_path):
    bank = tiny_bank()
    path = tmp_path / "b.fshb"
    write_bank(bank, path)
    assert load_bank(path) == bank


def test_feature_roundtrip_synthetic_byte_identical(tmp_path):
    features, semantics = generate(SyntheticSpec(samples_per_class=5, seed=3))
    p1, p2 = tmp_path / "f1.bin", tmp_path / "f2.bin"
    write_bank(features, p1)
    reloaded = load_bank(p1)
    assert reloaded == features
    write_bank(reloaded, p2)
    assert p1.read_bytes() == p2.read_bytes()

    s1 = tmp_path / "s1.bin"
    write_bank(semantics, s1)
    assert load_bank(s1) == semantics


def test_nan_feature_refused(tmp_path):
    bank = tiny_bank()
    bank.classes[0].features[0, 0] = np.nan
    with pytest.raises(BankValidationError, match="invalid bank"):
        write_bank(bank, tmp_path / "x.bin")


def test_negative_feature_refused(tmp_path):
    bank = tiny_bank()
    bank.classes[0].features[0, 0] = -1.0
    with pytest.raises(BankValidationError, match="negative"):
        write_bank(bank, tmp_path / "x.bin")


def test_corrupted_magic(tmp_path):
    path = tmp_path / "x.bin"
    write_bank(tiny_bank(), path)
    data = bytearray(path.read_bytes())
    data[:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(BankFormatError, match="unrecognized format"):
        load_bank(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "x.bin"
    write_bank(tiny_bank(), path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(BankFormatError, match="truncated payload"):
        load_bank(path)


def test_row_count_mismatch(tmp_path):
    # Declares n_c=3 but only stores 2 rows worth of payload.
    import struct

    path = tmp_path / "x.bin"
    payload = b"FSHB" + struct.pack("<III", 1, 2, 1)
    payload += struct.pack("<I", 1) + b"a" + struct.pack("<B", 0)
    payload += struct.pack("<I", 3)
    payload += np.zeros(4, dtype="<f4").tobytes()  # 2 rows of d=2
    path.write_bytes(payload)
    with pytest.raises(BankFormatError, match="truncated payload"):
        load_bank(path)


def test_missing_file():
    with pytest.raises(BankFormatError, match="missing file"):
        load_bank("/nonexistent/bank.bin")


def test_activation_map_roundtrip(tmp_path):
    maps = ActivationMapSet(
        entries={("img0", "a"): np.random.default_rng(0).uniform(size=(4, 6)).astype(np.float32)}
    )
    path = tmp_path / "m.fsam"
    write_bank(maps, path)
    assert load_bank(path) == maps


def test_activation_map_range_enforced(tmp_path):
    maps = ActivationMapSet(entries={("i", "c"): np.array([[1.5]], dtype=np.float32)})
    with pytest.raises(BankValidationError):
        write_bank(maps, tmp_path / "m.bin")


def test_validate_pair_ok():
    features, semantics = generate(SyntheticSpec(n_base=3, n_novel=2, samples_per_class=2))
    assert validate_pair(features, semantics).ok


def test_validate_pair_missing_semantic():
    features = tiny_bank()
    semantics = SemanticBank(dim=2, entries={"other": np.zeros(2, dtype=np.float32)})
    report = validate_pair(features, semantics)
    assert not report.ok
    assert report.missing_semantics == ["a"]


def test_validate_pair_dimension_mismatch():
    features = tiny_bank()
    semantics = SemanticBank(dim=3, entries={"a": np.zeros(2, dtype=np.float32)})
    report = validate_pair(features, semantics)
    assert "a" in report.dimension_mismatches
