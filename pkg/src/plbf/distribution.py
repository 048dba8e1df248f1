"""Score histograms over equal-width bins of [0, 1].

Keys are members of the set being represented, non-keys are everything
else.  Everything downstream consumes only the per-segment probability
masses (``g`` for keys, ``h`` for non-keys), so both CSV ingestion and
synthetic generation reduce to producing those two histograms.

Distributions are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

CSV_HEADER = ("element_id", "score", "label")

# Swap draws and score jitter come from PCG64 so that every artifact is
# reproducible from a single integer seed.
_rng = np.random.default_rng


def segment_index(score: float, n_segments: int) -> int:
    """Map a score in [0, 1] to its bin; the top edge folds into the last bin."""
    return min(int(score * n_segments), n_segments - 1)


@dataclass(frozen=True)
class ScoreRecord:
    """One scored element: opaque id, score in [0, 1], key/non-key label."""

    element_id: bytes | str
    score: float
    is_key: bool


@dataclass(frozen=True)
class SegmentedDistribution:
    """Per-segment key and non-key probability masses with prefix sums.

    ``g[i]`` (``h[i]``) is the probability that a key (non-key) score lands in
    segment ``i`` of the ``n_segments`` equal-width bins of [0, 1].  Prefix
    arrays have length ``n_segments + 1`` with ``prefix[0] == 0``, so the mass
    of 1-based segments ``lo..hi`` is ``prefix[hi] - prefix[lo - 1]``.

    ``n_keys`` records how many key elements produced ``g``; sizing formulas
    need it even though the masses themselves are normalized.
    """

    n_segments: int
    g: np.ndarray
    h: np.ndarray
    g_prefix: np.ndarray
    h_prefix: np.ndarray
    n_keys: int

    def __post_init__(self) -> None:
        n = self.n_segments
        if self.g.shape != (n,) or self.h.shape != (n,):
            raise ValidationError("mass arrays must have one entry per segment")
        if self.g_prefix.shape != (n + 1,) or self.h_prefix.shape != (n + 1,):
            raise ValidationError("prefix arrays must have n_segments + 1 entries")
        for arr in (self.g, self.h, self.g_prefix, self.h_prefix):
            arr.setflags(write=False)

    @classmethod
    def from_masses(
        cls,
        key_mass,
        nonkey_mass,
        n_keys: int,
        *,
        normalize: bool = True,
    ) -> "SegmentedDistribution":
        """Build from raw nonnegative mass vectors.

        With ``normalize`` (the default) each vector is scaled to sum to 1;
        callers passing already-normalized masses can switch it off to keep
        their floats bit-exact.
        """
        g = np.array(key_mass, dtype=np.float64)
        h = np.array(nonkey_mass, dtype=np.float64)
        if g.ndim != 1 or g.shape != h.shape or g.size < 1:
            raise ValidationError("mass vectors must be 1-D and equally sized")
        if not (np.isfinite(g).all() and np.isfinite(h).all()):
            raise ValidationError("mass vectors must be finite")
        if (g < 0).any() or (h < 0).any():
            raise ValidationError("mass vectors must be nonnegative")
        if normalize:
            gs, hs = g.sum(), h.sum()
            if gs <= 0 or hs <= 0:
                raise ValidationError("each mass vector needs positive total mass")
            g = g / gs
            h = h / hs
        return _build(int(g.size), g, h, n_keys)


def _build(n_segments: int, g: np.ndarray, h: np.ndarray, n_keys: int) -> SegmentedDistribution:
    return SegmentedDistribution(
        n_segments=n_segments,
        g=g,
        h=h,
        g_prefix=np.concatenate(([0.0], np.cumsum(g))),
        h_prefix=np.concatenate(([0.0], np.cumsum(h))),
        n_keys=n_keys,
    )


def segment_scores(records, n_segments: int) -> SegmentedDistribution:
    """Bin scored records into ``n_segments`` equal-width histograms.

    Raises a validation error for scores outside [0, 1] (naming the record),
    and distinct errors when the key side or the non-key side is empty.
    """
    if n_segments < 2:
        raise ValidationError("n_segments must be at least 2")
    key_counts = np.zeros(n_segments, dtype=np.int64)
    nonkey_counts = np.zeros(n_segments, dtype=np.int64)
    for rec in records:
        s = rec.score
        if not (0.0 <= s <= 1.0):
            raise ValidationError(
                f"record {rec.element_id!r} has score {s!r} outside [0, 1]"
            )
        idx = segment_index(s, n_segments)
        if rec.is_key:
            key_counts[idx] += 1
        else:
            nonkey_counts[idx] += 1
    n_keys = int(key_counts.sum())
    n_nonkeys = int(nonkey_counts.sum())
    if n_keys == 0:
        raise ValidationError("no key records: at least one record must have label 1")
    if n_nonkeys == 0:
        raise ValidationError("no non-key records: at least one record must have label 0")
    return _build(
        n_segments,
        key_counts / n_keys,
        nonkey_counts / n_nonkeys,
        n_keys,
    )


def is_ideal(dist: SegmentedDistribution) -> bool:
    """True when key/non-key mass ratios are non-decreasing across segments.

    Compared cross-multiplied (g[i]*h[i+1] <= g[i+1]*h[i]) so segments with
    zero non-key mass need no special casing.
    """
    g, h = dist.g, dist.h
    return bool(np.all(g[:-1] * h[1:] <= g[1:] * h[:-1]))


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the synthetic workload generator.

    Key mass per segment is proportional to rank**(-zipf_exponent), arranged
    non-decreasing across segments; non-key mass mirrors it non-increasing.
    ``n_swaps`` then exchanges adjacent segments at uniformly drawn positions,
    which dials in how far the artifact sits from the ideal shape.
    """

    n_segments: int
    n_keys: int
    n_nonkeys: int
    zipf_exponent: float = 1.0
    n_swaps: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_segments < 2:
            raise ValidationError("n_segments must be at least 2")
        if self.n_keys < 1 or self.n_nonkeys < 1:
            raise ValidationError("n_keys and n_nonkeys must be positive")
        if not (self.zipf_exponent > 0):
            raise ValidationError("zipf_exponent must be positive")
        if self.n_swaps < 0:
            raise ValidationError("n_swaps must be nonnegative")


def _zipf_base(n_segments: int, exponent: float) -> tuple[np.ndarray, np.ndarray]:
    weights = np.arange(1, n_segments + 1, dtype=np.float64) ** (-exponent)
    weights /= weights.sum()
    return weights[::-1].copy(), weights.copy()  # keys ascending, non-keys descending


def _swap_positions(n_swaps: int, n_segments: int, seed: int) -> np.ndarray:
    return _rng(seed).integers(0, n_segments - 1, size=n_swaps)


def zipfian_distribution(spec: SyntheticSpec) -> SegmentedDistribution:
    """Analytic Zipf-over-segments masses, optionally perturbed by swaps.

    Deterministic for a fixed spec; with ``n_swaps == 0`` the result always
    satisfies :func:`is_ideal`.
    """
    g, h = _zipf_base(spec.n_segments, spec.zipf_exponent)
    dist = _build(spec.n_segments, g, h, spec.n_keys)
    if spec.n_swaps:
        dist = apply_swaps(dist, spec.n_swaps, spec.seed)
    return dist


def apply_swaps(dist: SegmentedDistribution, n_swaps: int, seed: int) -> SegmentedDistribution:
    """Exchange the (g, h) pairs of adjacent segments at seeded random spots.

    Each swap picks i uniformly from {0, .., n_segments - 2} and exchanges
    segments i and i + 1 wholesale, so the multiset of (g, h) pairs is
    preserved.  ``n_swaps == 0`` returns the input unchanged.
    """
    if n_swaps < 0:
        raise ValidationError("n_swaps must be nonnegative")
    if n_swaps == 0:
        return dist
    g = dist.g.tolist()
    h = dist.h.tolist()
    for i in _swap_positions(n_swaps, dist.n_segments, seed).tolist():
        g[i], g[i + 1] = g[i + 1], g[i]
        h[i], h[i + 1] = h[i + 1], h[i]
    return _build(
        dist.n_segments,
        np.asarray(g, dtype=np.float64),
        np.asarray(h, dtype=np.float64),
        dist.n_keys,
    )


def _apportion(total: int, masses: np.ndarray) -> np.ndarray:
    """Split ``total`` into integer counts proportional to ``masses``.

    Largest-remainder rounding; remainder ties go to the lowest index so the
    result is deterministic.
    """
    quotas = masses * total
    counts = np.floor(quotas).astype(np.int64)
    short = total - int(counts.sum())
    if short:
        order = np.argsort(-(quotas - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def synthesize_records(spec: SyntheticSpec) -> list[ScoreRecord]:
    """Materialize a synthetic workload as concrete scored records.

    Counts per segment are apportioned from the analytic masses and nudged
    monotone (ascending keys, descending non-keys) before any swaps, so an
    unswapped artifact re-binned at ``spec.n_segments`` is ideal by
    construction rather than only in expectation.  Swaps then move the
    contents of adjacent segments, drawn from the same positions
    :func:`apply_swaps` would use for this seed.
    """
    g, h = _zipf_base(spec.n_segments, spec.zipf_exponent)
    key_counts = np.sort(_apportion(spec.n_keys, g)).tolist()
    nonkey_counts = np.sort(_apportion(spec.n_nonkeys, h))[::-1].tolist()
    rng = _rng(spec.seed)
    if spec.n_swaps:
        positions = rng.integers(0, spec.n_segments - 1, size=spec.n_swaps).tolist()
        for i in positions:
            key_counts[i], key_counts[i + 1] = key_counts[i + 1], key_counts[i]
            nonkey_counts[i], nonkey_counts[i + 1] = nonkey_counts[i + 1], nonkey_counts[i]
    records: list[ScoreRecord] = []
    records.extend(_fill_segments(rng, key_counts, spec.n_segments, True, "k"))
    records.extend(_fill_segments(rng, nonkey_counts, spec.n_segments, False, "q"))
    return records


def sample_records(
    dist: SegmentedDistribution,
    n_keys: int,
    n_nonkeys: int,
    seed: int,
    *,
    key_prefix: str = "k",
    nonkey_prefix: str = "q",
) -> list[ScoreRecord]:
    """Draw iid records from a distribution (multinomial over segments).

    Unlike :func:`synthesize_records` this is plain sampling: the empirical
    histogram only approaches ``dist`` as the counts grow.  Useful for
    held-out evaluation sets.
    """
    rng = _rng(seed)
    out: list[ScoreRecord] = []
    if n_keys:
        counts = rng.multinomial(n_keys, dist.g / dist.g.sum()).tolist()
        out.extend(_fill_segments(rng, counts, dist.n_segments, True, key_prefix))
    if n_nonkeys:
        counts = rng.multinomial(n_nonkeys, dist.h / dist.h.sum()).tolist()
        out.extend(_fill_segments(rng, counts, dist.n_segments, False, nonkey_prefix))
    return out


def _fill_segments(rng, counts, n_segments, is_key, prefix) -> list[ScoreRecord]:
    records = []
    serial = 0
    for seg, count in enumerate(counts):
        if not count:
            continue
        offsets = rng.random(count)
        for u in offsets:
            score = (seg + float(u)) / n_segments
            # Float rounding can push a score into the next bin; nudge it back.
            while segment_index(score, n_segments) != seg:
                score = np.nextafter(score, 0.0)
            records.append(ScoreRecord(f"{prefix}{serial:08d}", score, is_key))
            serial += 1
    return records


def read_records_csv(path) -> list[ScoreRecord]:
    """Parse ``element_id,score,label`` rows; label 1 marks keys.

    Malformed rows raise a validation error naming the line.  A header-only
    file yields an empty list.
    """
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file, expected header "
                                  f"{','.join(CSV_HEADER)}") from None
        if tuple(header) != CSV_HEADER:
            raise ValidationError(
                f"{path}: bad header {header!r}, expected {list(CSV_HEADER)}"
            )
        records = []
        for row in reader:
            line = reader.line_num
            if len(row) != 3:
                raise ValidationError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            element_id, score_text, label = row
            try:
                score = float(score_text)
            except ValueError:
                raise ValidationError(f"{path}:{line}: score {score_text!r} is not a number") from None
            if not (0.0 <= score <= 1.0):
                raise ValidationError(
                    f"{path}:{line}: record {element_id!r} has score {score} outside [0, 1]"
                )
            if label not in ("0", "1"):
                raise ValidationError(f"{path}:{line}: label must be 0 or 1, got {label!r}")
            records.append(ScoreRecord(element_id, score, label == "1"))
        return records


def write_records_csv(path, records) -> None:
    """Write records in the same ``element_id,score,label`` layout."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            ident = rec.element_id
            if isinstance(ident, bytes):
                ident = ident.decode("utf-8")
            writer.writerow((ident, repr(rec.score), "1" if rec.is_key else "0"))
