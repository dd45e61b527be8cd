import json

import numpy as np
import pytest

from subtrack.model import Tracklet
from subtrack.storage import (
    StorageError,
    dump_json,
    load_json,
    read_dataset,
    read_weights,
    synthetic_spec_from_dict,
    write_dataset,
    write_synthetic,
    write_weights,
)
from subtrack.synth import SpliceRecord, SyntheticSpec, generate


def test_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    tracklets = [
        Tracklet("a", rng.normal(size=(10, 6)).astype(np.float32), identity=1, camera=0),
        Tracklet("b", rng.normal(size=(4, 6)).astype(np.float32)),
    ]
    write_dataset(tracklets, tmp_path)
    loaded, splices = read_dataset(tmp_path)
    assert splices == {}
    by_id = {t.id: t for t in loaded}
    for t in tracklets:
        got = by_id[t.id]
        assert np.array_equal(
            got.frames.astype(np.float32), t.frames.astype(np.float32)
        )
    assert by_id["a"].identity == 1 and by_id["a"].camera == 0
    assert by_id["b"].identity is None and by_id["b"].camera is None


def test_feature_file_size(tmp_path):
    frames = np.zeros((10, 64), dtype=np.float32)
    write_dataset([Tracklet("x", frames)], tmp_path)
    assert (tmp_path / "x.f32").stat().st_size == 2560


def test_size_mismatch_names_tracklet(tmp_path):
    write_dataset([Tracklet("broken", np.zeros((3, 4)))], tmp_path)
    manifest = load_json(tmp_path / "manifest.json")
    manifest["tracklets"][0]["frame_count"] = 99
    dump_json(manifest, tmp_path / "manifest.json")
    with pytest.raises(StorageError, match="broken"):
        read_dataset(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(StorageError, match="manifest"):
        read_dataset(tmp_path)


def test_malformed_manifest(tmp_path):
    (tmp_path / "manifest.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(StorageError, match="malformed"):
        read_dataset(tmp_path)


def test_missing_feature_file(tmp_path):
    write_dataset([Tracklet("gone", np.zeros((2, 3)))], tmp_path)
    (tmp_path / "gone.f32").unlink()
    with pytest.raises(StorageError, match="gone"):
        read_dataset(tmp_path)


def test_duplicate_ids_rejected(tmp_path):
    dup = [Tracklet("d", np.zeros((1, 2))), Tracklet("d", np.zeros((1, 2)))]
    with pytest.raises(StorageError, match="unique"):
        write_dataset(dup, tmp_path)


def test_synthetic_round_trip_with_splices(tmp_path):
    spec = SyntheticSpec(
        num_identities=4,
        tracklets_per_identity=2,
        tracklet_length_range=(40, 60),
        splice_rate=0.8,
        splice_len_range=(8, 12),
        seed=5,
    )
    ds = generate(spec)
    assert ds.splice_log  # the rate makes at least one splice overwhelmingly likely
    write_synthetic(ds, tmp_path)
    tracklets, splices = read_dataset(tmp_path)
    assert len(tracklets) == len(ds.tracklets)
    assert splices == ds.splice_log
    assert all(isinstance(r, SpliceRecord) for recs in splices.values() for r in recs)


def test_dump_json_deterministic_bytes(tmp_path):
    payload = {"a": 1 / 3, "b": [1.0, 2.5e-17], "c": "text"}
    dump_json(payload, tmp_path / "one.json")
    dump_json(payload, tmp_path / "two.json")
    assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()
    # 17 significant digits round-trip doubles exactly
    assert load_json(tmp_path / "one.json")["a"] == 1 / 3


def test_dump_json_atomic_leaves_no_temp_files(tmp_path):
    dump_json({"k": 1}, tmp_path / "out.json")
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]


def test_manifest_shape(tmp_path):
    write_dataset([Tracklet("t0", np.zeros((2, 3)), identity=7, camera=1)], tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["format_version"] == 1
    assert manifest["d_raw"] == 3
    entry = manifest["tracklets"][0]
    assert entry["tracklet_id"] == "t0"
    assert entry["frame_count"] == 2
    assert entry["feature_file"] == "t0.f32"
    assert entry["identity"] == 7 and entry["camera"] == 1


def test_synthetic_spec_from_dict_tuples():
    spec = synthetic_spec_from_dict(
        {"num_identities": 3, "tracklet_length_range": [10, 20], "splice_len_range": [2, 4]}
    )
    assert spec.tracklet_length_range == (10, 20)
    assert spec.splice_len_range == (2, 4)


def test_weights_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    w = rng.normal(size=(6, 4))
    write_weights(w, tmp_path / "w.npy")
    assert np.array_equal(read_weights(tmp_path / "w.npy"), w)
    assert [p.name for p in tmp_path.iterdir()] == ["w.npy"]
