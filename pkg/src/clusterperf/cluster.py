"""In-memory model of a NameNode/DataNode block storage cluster.

The model tracks which DataNode holds which block replica and how many bytes
each node has consumed. No data is stored and nothing is networked. All
capacity arithmetic uses exact integers (and :class:`fractions.Fraction`
for ratios), so store/delete sequences can be checked bit-for-bit.

Placement policy: least-used node first, ties broken by natural order of
node id. Fewer eligible nodes than the replication factor is a degraded
(under-replicated) placement, not an error.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional

from .units import GB, MiB

__all__ = [
    "ClusterError",
    "DuplicateNodeError",
    "DuplicateFileError",
    "UnknownFileError",
    "PlacementError",
    "InsufficientSpaceError",
    "StateFormatError",
    "OsOverhead",
    "OVERHEAD_10GB",
    "OVERHEAD_REFERENCE_FRACTION",
    "ClusterConfig",
    "DataNodeState",
    "BlockRecord",
    "FileManifest",
    "MetadataStore",
    "Placement",
    "NodeUsage",
    "UsageReport",
    "StorageCluster",
    "split_into_blocks",
    "cluster_capacity",
]

STATE_FORMAT_VERSION = 1
_BLOCK_ID_RE = re.compile(r"^blk_(\d+)$")


class ClusterError(Exception):
    pass


class DuplicateNodeError(ClusterError):
    pass


class DuplicateFileError(ClusterError):
    pass


class UnknownFileError(ClusterError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class PlacementError(ClusterError):
    """No registered node can take a replica of the block."""


class InsufficientSpaceError(PlacementError):
    """A file could not be placed; the cluster is left unchanged."""


class StateFormatError(ClusterError, ValueError):
    pass


@dataclass(frozen=True)
class OsOverhead:
    """Per-node space taken by the operating system and software.

    Exactly one of ``nbytes`` (absolute) or ``fraction`` (of raw capacity)
    is set. Fractional overhead is rounded up to whole bytes.
    """

    nbytes: Optional[int] = None
    fraction: Optional[Fraction] = None

    def __post_init__(self):
        if (self.nbytes is None) == (self.fraction is None):
            raise ValueError("exactly one of nbytes or fraction must be given")
        if self.nbytes is not None and (not isinstance(self.nbytes, int) or self.nbytes < 0):
            raise ValueError(f"overhead bytes must be a nonnegative integer, got {self.nbytes!r}")
        if self.fraction is not None:
            object.__setattr__(self, "fraction", Fraction(self.fraction))
            if not 0 <= self.fraction <= 1:
                raise ValueError(f"overhead fraction must lie in [0, 1], got {self.fraction}")

    @classmethod
    def absolute(cls, nbytes: int) -> OsOverhead:
        return cls(nbytes=nbytes)

    @classmethod
    def proportional(cls, fraction) -> OsOverhead:
        # str() first so a float like 0.098125 maps to the decimal it was written as
        return cls(fraction=Fraction(str(fraction)) if isinstance(fraction, float) else Fraction(fraction))

    def reserved(self, raw_capacity: int) -> int:
        if self.nbytes is not None:
            return min(self.nbytes, raw_capacity)
        exact = self.fraction * raw_capacity
        return -((-exact.numerator) // exact.denominator)

    def usable(self, raw_capacity: int) -> int:
        return raw_capacity - self.reserved(raw_capacity)

    def to_dict(self) -> dict:
        if self.nbytes is not None:
            return {"bytes": self.nbytes}
        return {"fraction": str(self.fraction)}

    @classmethod
    def from_dict(cls, data: dict) -> OsOverhead:
        if set(data) == {"bytes"}:
            return cls.absolute(data["bytes"])
        if set(data) == {"fraction"}:
            return cls.proportional(data["fraction"])
        raise StateFormatError(f"os_overhead must have exactly one of 'bytes' or 'fraction', got {sorted(data)}")


# "about 10 GB" per node for the OS, leaving 70 GB of an 80 GB disk.
OVERHEAD_10GB = OsOverhead.absolute(10 * GB)
# 9.8125% for the OS, 90.1875% left for storage.
OVERHEAD_REFERENCE_FRACTION = OsOverhead.proportional(Fraction(98125, 1000000))


@dataclass(frozen=True)
class ClusterConfig:
    block_size: int = 64 * MiB
    replication_factor: int = 3
    os_overhead: OsOverhead = OVERHEAD_10GB

    def __post_init__(self):
        if not isinstance(self.block_size, int) or self.block_size <= 0:
            raise ValueError(f"block_size must be a positive integer, got {self.block_size!r}")
        if not isinstance(self.replication_factor, int) or self.replication_factor < 1:
            raise ValueError(f"replication_factor must be an integer >= 1, got {self.replication_factor!r}")

    def to_dict(self) -> dict:
        return {
            "block_size": self.block_size,
            "replication_factor": self.replication_factor,
            "os_overhead": self.os_overhead.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ClusterConfig:
        _expect_keys(data, {"block_size", "replication_factor", "os_overhead"}, "config")
        return cls(data["block_size"], data["replication_factor"], OsOverhead.from_dict(data["os_overhead"]))


@dataclass
class DataNodeState:
    node_id: str
    raw_capacity: int
    usable_capacity: int
    used: int = 0
    # block_id -> bytes held for that replica
    replicas: dict[str, int] = field(default_factory=dict)

    @property
    def free(self) -> int:
        return self.usable_capacity - self.used

    @property
    def stored_replicas(self) -> frozenset[str]:
        return frozenset(self.replicas)


@dataclass(frozen=True)
class BlockRecord:
    block_id: str
    length: int
    replica_locations: tuple[str, ...]
    under_replicated: bool = False

    @property
    def footprint(self) -> int:
        return self.length * len(self.replica_locations)


@dataclass(frozen=True)
class FileManifest:
    file_id: str
    size: int
    blocks: tuple[BlockRecord, ...]

    @property
    def footprint(self) -> int:
        """Bytes consumed across the cluster by all replicas of this file."""
        return sum(b.footprint for b in self.blocks)

    @property
    def replica_count(self) -> int:
        return sum(len(b.replica_locations) for b in self.blocks)

    @property
    def under_replicated_blocks(self) -> int:
        return sum(b.under_replicated for b in self.blocks)

    def to_dict(self) -> dict:
        return {
            "file_id": self.file_id,
            "size": self.size,
            "blocks": [
                {
                    "block_id": b.block_id,
                    "length": b.length,
                    "replicas": list(b.replica_locations),
                    "under_replicated": b.under_replicated,
                }
                for b in self.blocks
            ],
        }


class MetadataStore:
    """What the NameNode holds: file id -> manifest."""

    def __init__(self):
        self.manifests: dict[str, FileManifest] = {}

    def __len__(self):
        return len(self.manifests)

    def __contains__(self, file_id):
        return file_id in self.manifests

    def __iter__(self) -> Iterator[FileManifest]:
        return iter(self.manifests.values())

    def get(self, file_id: str) -> FileManifest:
        try:
            return self.manifests[file_id]
        except KeyError:
            raise UnknownFileError(f"unknown file {file_id!r}") from None

    def add(self, manifest: FileManifest) -> None:
        if manifest.file_id in self.manifests:
            raise DuplicateFileError(f"file {manifest.file_id!r} already stored")
        self.manifests[manifest.file_id] = manifest

    def remove(self, file_id: str) -> FileManifest:
        manifest = self.get(file_id)
        del self.manifests[file_id]
        return manifest

    @property
    def block_count(self) -> int:
        return sum(len(m.blocks) for m in self.manifests.values())


class Placement(NamedTuple):
    nodes: tuple[str, ...]
    under_replicated: bool


@dataclass(frozen=True)
class NodeUsage:
    node_id: str
    raw: int
    usable: int
    used: int
    free: int


@dataclass(frozen=True)
class UsageReport:
    nodes: tuple[NodeUsage, ...]
    total_raw: int
    total_usable: int
    total_used: int
    average_used_per_node: Fraction
    usable_fraction: Fraction


def _natural_key(node_id: str):
    return tuple(int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", node_id))


def _expect_keys(data, keys: set, where: str) -> None:
    if not isinstance(data, dict):
        raise StateFormatError(f"{where}: expected an object")
    missing, extra = keys - set(data), set(data) - keys
    if missing or extra:
        raise StateFormatError(f"{where}: missing keys {sorted(missing)}, unexpected keys {sorted(extra)}")


def _check(condition, message) -> None:
    if not condition:
        raise AssertionError(message)


def split_into_blocks(file_size: int, block_size: int) -> list[int]:
    """Block lengths for a file: full blocks plus a shorter tail, if any."""
    if file_size < 0:
        raise ValueError(f"file_size must be >= 0, got {file_size}")
    if block_size <= 0:
        raise ValueError(f"block_size must be > 0, got {block_size}")
    full, tail = divmod(file_size, block_size)
    return [block_size] * full + ([tail] if tail else [])


class StorageCluster:
    """A NameNode's view of its DataNodes and the files spread across them."""

    def __init__(self, config: ClusterConfig | None = None):
        self.config = config or ClusterConfig()
        self.nodes: dict[str, DataNodeState] = {}
        self.metadata = MetadataStore()
        self._next_block = 0

    def register_node(self, node_id: str, raw_capacity: int) -> DataNodeState:
        if node_id in self.nodes:
            raise DuplicateNodeError(f"node {node_id!r} already registered")
        if not isinstance(raw_capacity, int) or raw_capacity < 0:
            raise ValueError(f"raw_capacity must be a nonnegative integer, got {raw_capacity!r}")
        node = DataNodeState(node_id, raw_capacity, self.config.os_overhead.usable(raw_capacity))
        self.nodes[node_id] = node
        return node

    def capacity(self) -> int:
        return sum(n.usable_capacity for n in self.nodes.values())

    @property
    def used(self) -> int:
        return sum(n.used for n in self.nodes.values())

    def _choose(self, block_length: int, replication: int, used: dict[str, int]) -> Placement:
        eligible = [
            n for n in self.nodes.values() if n.usable_capacity - used[n.node_id] >= block_length
        ]
        if not eligible:
            raise PlacementError(f"no node has {block_length} free bytes")
        eligible.sort(key=lambda n: (used[n.node_id], _natural_key(n.node_id)))
        chosen = tuple(n.node_id for n in eligible[:replication])
        return Placement(chosen, len(chosen) < replication)

    def place_replicas(self, block_length: int, replication_factor: int | None = None) -> Placement:
        """Pick distinct nodes for one block without modifying the cluster."""
        r = self.config.replication_factor if replication_factor is None else replication_factor
        if r < 1:
            raise ValueError(f"replication_factor must be >= 1, got {r}")
        return self._choose(block_length, r, {k: n.used for k, n in self.nodes.items()})

    def store_file(self, file_id: str, size: int) -> FileManifest:
        """Split, place and record a file. All-or-nothing on failure."""
        if file_id in self.metadata:
            raise DuplicateFileError(f"file {file_id!r} already stored")
        if not isinstance(size, int) or size < 0:
            raise ValueError(f"size must be a nonnegative integer, got {size!r}")
        r = self.config.replication_factor
        scratch = {k: n.used for k, n in self.nodes.items()}
        plan = []
        for length in split_into_blocks(size, self.config.block_size):
            try:
                placement = self._choose(length, r, scratch)
            except PlacementError as exc:
                raise InsufficientSpaceError(f"cannot store {file_id!r} ({size} bytes): {exc}") from None
            for node_id in placement.nodes:
                scratch[node_id] += length
            plan.append((length, placement))

        blocks = []
        for length, placement in plan:
            block_id = f"blk_{self._next_block:010d}"
            self._next_block += 1
            for node_id in placement.nodes:
                node = self.nodes[node_id]
                node.replicas[block_id] = length
                node.used += length
            blocks.append(BlockRecord(block_id, length, placement.nodes, placement.under_replicated))
        manifest = FileManifest(file_id, size, tuple(blocks))
        self.metadata.add(manifest)
        return manifest

    def delete_file(self, file_id: str) -> int:
        """Drop a file and all its replicas; returns the bytes released."""
        manifest = self.metadata.remove(file_id)
        released = 0
        for block in manifest.blocks:
            for node_id in block.replica_locations:
                node = self.nodes[node_id]
                node.used -= node.replicas.pop(block.block_id)
                released += block.length
        return released

    def usage_report(self) -> UsageReport:
        rows = tuple(
            NodeUsage(n.node_id, n.raw_capacity, n.usable_capacity, n.used, n.free)
            for n in sorted(self.nodes.values(), key=lambda n: _natural_key(n.node_id))
        )
        total_raw = sum(r.raw for r in rows)
        total_usable = sum(r.usable for r in rows)
        total_used = sum(r.used for r in rows)
        return UsageReport(
            nodes=rows,
            total_raw=total_raw,
            total_usable=total_usable,
            total_used=total_used,
            average_used_per_node=Fraction(total_used, len(rows)) if rows else Fraction(0),
            usable_fraction=Fraction(total_usable, total_raw) if total_raw else Fraction(0),
        )

    def check_invariants(self) -> None:
        """Raise AssertionError if conservation, distinctness or capacity is violated."""
        expected: dict[str, dict[str, int]] = {k: {} for k in self.nodes}
        seen_blocks = set()
        for manifest in self.metadata:
            _check(sum(b.length for b in manifest.blocks) == manifest.size, manifest.file_id)
            for i, block in enumerate(manifest.blocks):
                _check(block.block_id not in seen_blocks, f"duplicate block id {block.block_id}")
                seen_blocks.add(block.block_id)
                if i < len(manifest.blocks) - 1:
                    _check(block.length == self.config.block_size, block.block_id)
                locs = block.replica_locations
                _check(len(set(locs)) == len(locs), f"{block.block_id} has duplicate replicas")
                _check(locs, f"{block.block_id} has no replicas")
                for node_id in locs:
                    _check(node_id in self.nodes, f"{block.block_id} on unknown node {node_id}")
                    expected[node_id][block.block_id] = block.length
        for node_id, node in self.nodes.items():
            _check(node.replicas == expected[node_id], f"replica map of {node_id} out of sync")
            _check(node.used == sum(node.replicas.values()), f"used counter of {node_id} out of sync")
            _check(0 <= node.used <= node.usable_capacity, f"{node_id} over capacity")

    def to_dict(self) -> dict:
        return {
            "format_version": STATE_FORMAT_VERSION,
            "config": self.config.to_dict(),
            "next_block": self._next_block,
            "nodes": [
                {"node_id": n.node_id, "raw_capacity": n.raw_capacity, "used": n.used}
                for n in self.nodes.values()
            ],
            "files": [m.to_dict() for m in self.metadata],
        }

    @classmethod
    def from_dict(cls, data: dict) -> StorageCluster:
        _expect_keys(data, {"format_version", "config", "next_block", "nodes", "files"}, "state")
        if data["format_version"] != STATE_FORMAT_VERSION:
            raise StateFormatError(f"unsupported format_version {data['format_version']!r}")
        cluster = cls(ClusterConfig.from_dict(data["config"]))
        declared_used = {}
        for i, nd in enumerate(data["nodes"]):
            _expect_keys(nd, {"node_id", "raw_capacity", "used"}, f"nodes[{i}]")
            try:
                cluster.register_node(nd["node_id"], nd["raw_capacity"])
            except (DuplicateNodeError, ValueError) as exc:
                raise StateFormatError(f"nodes[{i}]: {exc}") from None
            declared_used[nd["node_id"]] = nd["used"]
        for i, fd in enumerate(data["files"]):
            _expect_keys(fd, {"file_id", "size", "blocks"}, f"files[{i}]")
            blocks = []
            for j, bd in enumerate(fd["blocks"]):
                _expect_keys(bd, {"block_id", "length", "replicas", "under_replicated"}, f"files[{i}].blocks[{j}]")
                blocks.append(BlockRecord(bd["block_id"], bd["length"], tuple(bd["replicas"]), bd["under_replicated"]))
                for node_id in bd["replicas"]:
                    if node_id not in cluster.nodes:
                        raise StateFormatError(f"files[{i}].blocks[{j}]: unknown node {node_id!r}")
                    node = cluster.nodes[node_id]
                    node.replicas[bd["block_id"]] = bd["length"]
                    node.used += bd["length"]
            try:
                cluster.metadata.add(FileManifest(fd["file_id"], fd["size"], tuple(blocks)))
            except DuplicateFileError as exc:
                raise StateFormatError(f"files[{i}]: {exc}") from None
        next_block = data["next_block"]
        if not isinstance(next_block, int) or next_block < 0:
            raise StateFormatError(f"next_block must be a nonnegative integer, got {next_block!r}")
        for manifest in cluster.metadata:
            for block in manifest.blocks:
                m = _BLOCK_ID_RE.match(block.block_id)
                if m and int(m.group(1)) >= next_block:
                    raise StateFormatError(f"block id {block.block_id!r} collides with next_block={next_block}")
        cluster._next_block = next_block
        for node_id, used in declared_used.items():
            if cluster.nodes[node_id].used != used:
                raise StateFormatError(
                    f"node {node_id!r}: declared used={used} but replicas sum to {cluster.nodes[node_id].used}"
                )
        try:
            cluster.check_invariants()
        except AssertionError as exc:
            raise StateFormatError(f"inconsistent state: {exc}") from None
        return cluster

    def export_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def import_json(cls, text: str) -> StorageCluster:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StateFormatError(f"malformed state JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)


def cluster_capacity(cluster: StorageCluster) -> int:
    return cluster.capacity()
