"""Pair enumeration with distance gates, class sampling, pair persistence.

Within each floor subset every unordered pair of distinct fingerprints is
considered; pairs land in CLOSE (d <= close_max_m) or FAR
(far_min_m <= d <= far_max_m) and everything else is dropped: the band
between the gates to keep borderline cases out of training, and anything
beyond far_max_m to focus on the near/far distinction that matters.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .core import Fingerprint, FingerprintPair, FloorKey, ProximityClass


@dataclass(frozen=True)
class PairingConfig:
    close_max_m: float = 2.25
    far_min_m: float = 3.25
    far_max_m: float = 20.0
    include_same_burst: bool = True

    def __post_init__(self) -> None:
        if not (0 < self.close_max_m < self.far_min_m <= self.far_max_m):
            raise ValueError(
                "require 0 < close_max_m < far_min_m <= far_max_m, got "
                f"{self.close_max_m}/{self.far_min_m}/{self.far_max_m}"
            )

    def classify(self, distance_m: float) -> Optional[ProximityClass]:
        if 0 <= distance_m <= self.close_max_m:
            return ProximityClass.CLOSE
        if self.far_min_m <= distance_m <= self.far_max_m:
            return ProximityClass.FAR
        return None


def pair_distance(a: Fingerprint, b: Fingerprint) -> float:
    """2-D Euclidean distance in meters; fingerprints must share a floor."""
    if a.floor_key != b.floor_key:
        raise ValueError(f"cannot measure distance across floors: {a.id} vs {b.id}")
    return math.dist(a.position, b.position)


def make_pair(
    a: Fingerprint, b: Fingerprint, distance_m: float, label: ProximityClass
) -> FingerprintPair:
    """Build a canonically ordered pair: fewer detected APs first, ties by id."""
    if (b.ap_count, b.id) < (a.ap_count, a.id):
        a, b = b, a
    return FingerprintPair(a=a, b=b, distance_m=distance_m, label=label)


def enumerate_pairs(
    fps: Sequence[Fingerprint], cfg: PairingConfig = PairingConfig()
) -> list[FingerprintPair]:
    """Enumerate labeled pairs across all floor subsets.

    Fingerprints with no readings are not admitted to pairing.  Output order
    is deterministic: floors sorted, fingerprints sorted by id within each
    floor, pairs in combination order.
    """
    by_floor: dict[FloorKey, list[Fingerprint]] = {}
    for fp in fps:
        if not fp.readings:
            continue
        by_floor.setdefault(fp.floor_key, []).append(fp)
    pairs: list[FingerprintPair] = []
    for floor_key in sorted(by_floor):
        group = sorted(by_floor[floor_key], key=lambda fp: fp.id)
        for a, b in combinations(group, 2):
            if (
                not cfg.include_same_burst
                and a.burst_id is not None
                and a.burst_id == b.burst_id
            ):
                continue
            d = math.dist(a.position, b.position)
            label = cfg.classify(d)
            if label is None:
                continue
            pairs.append(make_pair(a, b, d, label))
    return pairs


def sample_training_set(
    pairs: Sequence[FingerprintPair], n_close: int, n_far: int, seed: int
) -> list[FingerprintPair]:
    """Uniform per-class sample without replacement, deterministic given seed.

    The selection keeps the input's relative order; the pairs not selected
    form the evaluation pool (see :func:`holdout`).
    """
    close_idx = [i for i, p in enumerate(pairs) if p.label is ProximityClass.CLOSE]
    far_idx = [i for i, p in enumerate(pairs) if p.label is ProximityClass.FAR]
    if n_close > len(close_idx):
        raise ValueError(f"requested {n_close} Close pairs, only {len(close_idx)} available")
    if n_far > len(far_idx):
        raise ValueError(f"requested {n_far} Far pairs, only {len(far_idx)} available")
    rng = random.Random(seed)
    chosen = sorted(rng.sample(close_idx, n_close) + rng.sample(far_idx, n_far))
    return [pairs[i] for i in chosen]


def holdout(
    pairs: Sequence[FingerprintPair], selected: Sequence[FingerprintPair]
) -> list[FingerprintPair]:
    """Pairs not in ``selected``, in original order: the evaluation pool."""
    taken = {p.key for p in selected}
    return [p for p in pairs if p.key not in taken]


# ---------------------------------------------------------------------------
# Persistence: line-delimited records referencing fingerprint ids
# ---------------------------------------------------------------------------

def save_pairs(pairs: Iterable[FingerprintPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            rec = {
                "a": p.a.id,
                "b": p.b.id,
                "distance_m": p.distance_m,
                "label": p.label.value,
            }
            fh.write(json.dumps(rec, separators=(",", ":")))
            fh.write("\n")


def load_pairs(path: str | Path, fps: Sequence[Fingerprint]) -> list[FingerprintPair]:
    """Resolve a persisted pair file against a fingerprint collection."""
    by_id = {fp.id: fp for fp in fps}
    if len(by_id) != len(fps):
        raise ValueError("fingerprint ids are not unique; cannot resolve pairs")
    out: list[FingerprintPair] = []
    p = Path(path)
    with open(p, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                a = by_id[rec["a"]]
                b = by_id[rec["b"]]
                label = ProximityClass(rec["label"])
                distance = float(rec["distance_m"])
            except KeyError as e:
                raise ValueError(f"{p}:{lineno}: unresolved reference or field {e}") from e
            except (TypeError, ValueError) as e:
                raise ValueError(f"{p}:{lineno}: bad pair record ({e})") from e
            out.append(make_pair(a, b, distance, label))
    return out
