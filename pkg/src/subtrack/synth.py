"""Synthetic tracklet datasets with known ground truth.

Each identity gets a latent unit-vector prototype; tracklet frames are the
prototype plus a per-camera bias plus isotropic jitter. A fraction of
tracklets receives a contiguous spliced segment drawn from a different
identity's prototype, emulating identity-swap tracking errors. The splice
log is the oracle for scoring the noise filter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Tracklet

_MAX_PROTO_TRIES = 20000


@dataclass(frozen=True)
class SyntheticSpec:
    num_identities: int = 16
    num_cameras: int = 2
    tracklets_per_identity: int = 3
    tracklet_length_range: tuple[int, int] = (64, 128)
    raw_dim: int = 48
    identity_separation: float = 0.6   # minimum pairwise prototype angle, radians
    camera_shift_scale: float = 0.1
    splice_rate: float = 0.0
    splice_len_range: tuple[int, int] = (16, 32)
    jitter_scale: float = 0.05
    seed: int = 0

    def check(self) -> list[str]:
        lo, hi = self.tracklet_length_range
        slo, shi = self.splice_len_range
        checks = [
            (self.num_identities >= 1, "num_identities >= 1"),
            (self.num_cameras >= 1, "num_cameras >= 1"),
            (self.tracklets_per_identity >= 1, "tracklets_per_identity >= 1"),
            (1 <= lo <= hi, "tracklet_length_range ordered and positive"),
            (1 <= slo <= shi, "splice_len_range ordered and positive"),
            (self.raw_dim >= 2, "raw_dim >= 2"),
            (0.0 <= self.splice_rate <= 1.0, "splice_rate in [0, 1]"),
            (self.identity_separation >= 0.0, "identity_separation >= 0"),
            (self.jitter_scale >= 0.0, "jitter_scale >= 0"),
            (self.camera_shift_scale >= 0.0, "camera_shift_scale >= 0"),
        ]
        problems = [rule for ok, rule in checks if not ok]
        if self.splice_rate > 0 and shi >= lo:
            problems.append("splice_len_range max must be < tracklet_length_range min")
        return problems


@dataclass(frozen=True)
class SpliceRecord:
    start: int  # inclusive frame index within the tracklet
    end: int    # inclusive
    source_identity: int


@dataclass(frozen=True)
class SyntheticDataset:
    spec: SyntheticSpec
    tracklets: list[Tracklet]
    splice_log: dict[str, list[SpliceRecord]]
    prototypes: np.ndarray = field(repr=False, default=None)

    def tracklet(self, tracklet_id: str) -> Tracklet:
        for t in self.tracklets:
            if t.id == tracklet_id:
                return t
        raise KeyError(tracklet_id)


def _sample_prototypes(rng: np.random.Generator, count: int, dim: int, separation: float) -> np.ndarray:
    """Unit vectors whose pairwise angle tracks ``separation``.

    Each prototype blends a shared direction with its own random direction
    (small separation pulls all identities together, making the clustering
    problem hard); candidates are resampled until every pairwise cosine
    similarity stays <= cos(separation).
    """
    max_cos = np.cos(separation)
    blend = min(separation, np.pi / 2)
    shared = rng.normal(size=dim)
    shared /= np.linalg.norm(shared)
    protos = np.empty((count, dim))
    accepted = 0
    tries = 0
    while accepted < count:
        r = rng.normal(size=dim)
        r -= (r @ shared) * shared
        r /= np.linalg.norm(r)
        v = np.cos(blend) * shared + np.sin(blend) * r
        v /= np.linalg.norm(v)
        if accepted == 0 or np.max(protos[:accepted] @ v) <= max_cos:
            protos[accepted] = v
            accepted += 1
        tries += 1
        if tries > _MAX_PROTO_TRIES:
            raise ValueError(
                f"could not place {count} prototypes with separation {separation} in dim {dim}"
            )
    return protos


def generate(spec: SyntheticSpec) -> SyntheticDataset:
    problems = spec.check()
    if problems:
        raise ValueError("invalid synthetic spec: " + "; ".join(problems))
    rng = np.random.default_rng(spec.seed)
    protos = _sample_prototypes(rng, spec.num_identities, spec.raw_dim, spec.identity_separation)
    camera_bias = rng.normal(size=(spec.num_cameras, spec.raw_dim)) * spec.camera_shift_scale

    lo, hi = spec.tracklet_length_range
    slo, shi = spec.splice_len_range
    tracklets: list[Tracklet] = []
    splice_log: dict[str, list[SpliceRecord]] = {}
    for ident in range(spec.num_identities):
        for t in range(spec.tracklets_per_identity):
            tid = f"id{ident:04d}_t{t}"
            camera = int(rng.integers(spec.num_cameras))
            length = int(rng.integers(lo, hi + 1))
            frames = (
                protos[ident]
                + camera_bias[camera]
                + spec.jitter_scale * rng.normal(size=(length, spec.raw_dim))
            )
            if spec.splice_rate > 0 and rng.random() < spec.splice_rate and spec.num_identities > 1:
                slen = int(rng.integers(slo, shi + 1))
                start = int(rng.integers(0, length - slen + 1))
                source = int(rng.integers(spec.num_identities - 1))
                if source >= ident:
                    source += 1
                frames[start : start + slen] = (
                    protos[source]
                    + camera_bias[camera]
                    + spec.jitter_scale * rng.normal(size=(slen, spec.raw_dim))
                )
                splice_log[tid] = [SpliceRecord(start, start + slen - 1, source)]
            tracklets.append(Tracklet(tid, frames, identity=ident, camera=camera))
    return SyntheticDataset(spec=spec, tracklets=tracklets, splice_log=splice_log, prototypes=protos)


def oracle_noise_indices(ds: SyntheticDataset, tracklet_id: str) -> set[int]:
    """Ground-truth spliced frame indices of one tracklet."""
    ds.tracklet(tracklet_id)  # raises KeyError for unknown ids
    indices: set[int] = set()
    for rec in ds.splice_log.get(tracklet_id, []):
        indices.update(range(rec.start, rec.end + 1))
    return indices
