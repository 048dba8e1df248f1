"""Region-partitioned filter: one backing Bloom filter per planned region.

A query maps its score to a segment, the segment to a region, and asks that
region's filter about the element.  Regions whose planned rate is 1 store
nothing and answer true; regions that received no keys store nothing and
answer false.  Keys always answer true: they were inserted into the filter
of the region their score falls in, and Bloom filters have no false
negatives.
"""

from __future__ import annotations

import json
import struct
from bisect import bisect_right

from .bloom import BloomFilter
from .distribution import segment_index
from .errors import ValidationError
from .optimizer import RegionPlan, plan_from_dict, plan_to_dict

_MAGIC = b"PLBF"
_VERSION = 1
_PREFIX = struct.Struct("<4sHI")  # magic, version, header length
_MASK64 = (1 << 64) - 1
_SEED_STRIDE = 0x9E3779B97F4A7C15


def region_seed(seed: int, region: int) -> int:
    """Per-region hash seed: distinct regions must probe independently."""
    return (seed ^ ((region + 1) * _SEED_STRIDE)) & _MASK64


class PlbfFilter:
    """A region plan plus its backing filters.

    ``region_filters`` has one entry per region; ``None`` marks a region
    that stores nothing (rate-1 regions answer true, keyless ones false).
    """

    __slots__ = ("plan", "seed", "region_filters")

    def __init__(
        self,
        plan: RegionPlan,
        region_filters: tuple[BloomFilter | None, ...],
        seed: int = 0,
    ) -> None:
        if len(region_filters) != plan.n_regions:
            raise ValidationError(
                f"expected {plan.n_regions} region filters, got {len(region_filters)}"
            )
        for r, filt in enumerate(region_filters):
            if filt is not None and plan.fprs[r] >= 1.0:
                raise ValidationError(
                    f"region {r} has rate 1 and must not carry a filter"
                )
        if not (0 <= seed <= _MASK64):
            raise ValidationError("seed must fit in 64 bits")
        self.plan = plan
        self.seed = int(seed)
        self.region_filters = tuple(region_filters)

    @property
    def n_segments(self) -> int:
        return self.plan.n_segments

    @property
    def total_bits(self) -> int:
        """Bits held by the backing filters (headers and plan excluded)."""
        return sum(f.n_bits for f in self.region_filters if f is not None)

    def region_of(self, score: float) -> int:
        if not (0.0 <= score <= 1.0):
            raise ValidationError(f"score must lie in [0, 1], got {score!r}")
        seg = segment_index(score, self.n_segments)
        return bisect_right(self.plan.boundaries, seg) - 1

    def query(self, element_id: bytes | str, score: float) -> bool:
        region = self.region_of(score)
        filt = self.region_filters[region]
        if filt is None:
            return self.plan.fprs[region] >= 1.0
        return filt.contains(element_id)

    def measure_fpr(self, records) -> float:
        """Fraction of the given non-key records that query positive."""
        positives = 0
        total = 0
        for rec in records:
            if rec.is_key:
                raise ValidationError(
                    f"measure_fpr expects non-keys only, got key {rec.element_id!r}"
                )
            positives += self.query(rec.element_id, rec.score)
            total += 1
        if total == 0:
            raise ValidationError("measure_fpr needs at least one record")
        return positives / total

    def save(self, path) -> None:
        kinds = []
        blobs = []
        offset = 0
        for r, filt in enumerate(self.region_filters):
            if filt is None:
                kind = "always_true" if self.plan.fprs[r] >= 1.0 else "always_false"
                kinds.append({"kind": kind, "offset": 0, "length": 0})
                continue
            blob = filt.to_bytes()
            kinds.append({"kind": "bloom", "offset": offset, "length": len(blob)})
            blobs.append(blob)
            offset += len(blob)
        header = {
            "n_segments": self.n_segments,
            "seed": self.seed,
            "algorithm": self.plan.algorithm,
            "plan": plan_to_dict(self.plan),
            "regions": kinds,
        }
        payload = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_PREFIX.pack(_MAGIC, _VERSION, len(payload)))
            fh.write(payload)
            for blob in blobs:
                fh.write(blob)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlbfFilter):
            return NotImplemented
        return (
            self.plan == other.plan
            and self.seed == other.seed
            and self.region_filters == other.region_filters
        )

    def __repr__(self) -> str:
        stored = sum(1 for f in self.region_filters if f is not None)
        return (
            f"PlbfFilter(n_regions={self.plan.n_regions}, stored={stored}, "
            f"total_bits={self.total_bits})"
        )


def build_filter(records, plan: RegionPlan, seed: int = 0) -> PlbfFilter:
    """Insert key records into per-region filters sized from the plan.

    Two passes: count keys per region to size each filter, then insert.
    Every record must be a key; non-keys only ever inform the plan.
    """
    table = list(records)
    boundaries = plan.boundaries
    n = plan.n_segments
    regions = [0] * plan.n_regions
    homes = []
    for rec in table:
        if not rec.is_key:
            raise ValidationError(
                f"build_filter expects keys only, got non-key {rec.element_id!r}"
            )
        if not (0.0 <= rec.score <= 1.0):
            raise ValidationError(
                f"score must lie in [0, 1], got {rec.score!r} "
                f"for {rec.element_id!r}"
            )
        home = bisect_right(boundaries, segment_index(rec.score, n)) - 1
        homes.append(home)
        regions[home] += 1
    filters: list[BloomFilter | None] = []
    for r, count in enumerate(regions):
        if plan.fprs[r] >= 1.0 or count == 0:
            filters.append(None)
        else:
            filters.append(
                BloomFilter.for_capacity(count, plan.fprs[r], region_seed(seed, r))
            )
    for rec, home in zip(table, homes):
        filt = filters[home]
        if filt is not None:
            filt.insert(rec.element_id)
    return PlbfFilter(plan, tuple(filters), seed)


def load_filter(path) -> PlbfFilter:
    """Read a filter written by :meth:`PlbfFilter.save`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _PREFIX.size:
        raise ValidationError("truncated filter file")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != _MAGIC:
        raise ValidationError(f"bad file magic {magic!r}")
    if version != _VERSION:
        raise ValidationError(f"unsupported file version {version}")
    body = data[_PREFIX.size:]
    if len(body) < header_len:
        raise ValidationError("truncated filter header")
    try:
        header = json.loads(body[:header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"unreadable filter header: {exc}") from exc
    try:
        plan = plan_from_dict(header["plan"], algorithm=str(header["algorithm"]))
        seed = int(header["seed"])
        n_segments = int(header["n_segments"])
        entries = header["regions"]
    except KeyError as exc:
        raise ValidationError(f"filter header missing field {exc}") from exc
    if n_segments != plan.n_segments:
        raise ValidationError(
            f"header says {n_segments} segments, plan says {plan.n_segments}"
        )
    if len(entries) != plan.n_regions:
        raise ValidationError(
            f"expected {plan.n_regions} region entries, got {len(entries)}"
        )
    blob_section = body[header_len:]
    filters: list[BloomFilter | None] = []
    for r, entry in enumerate(entries):
        kind = entry.get("kind")
        if kind == "always_true":
            if plan.fprs[r] < 1.0:
                raise ValidationError(f"region {r} marked always_true but rate < 1")
            filters.append(None)
        elif kind == "always_false":
            if plan.fprs[r] >= 1.0:
                raise ValidationError(f"region {r} marked always_false but rate is 1")
            filters.append(None)
        elif kind == "bloom":
            off, length = int(entry["offset"]), int(entry["length"])
            if not (0 <= off <= off + length <= len(blob_section)):
                raise ValidationError(f"region {r} blob range out of bounds")
            filters.append(BloomFilter.from_bytes(bytes(blob_section[off:off + length])))
        else:
            raise ValidationError(f"region {r} has unknown kind {kind!r}")
    return PlbfFilter(plan, tuple(filters), seed)


__all__ = [
    "PlbfFilter",
    "build_filter",
    "load_filter",
    "region_seed",
]
