"""Cache placement, queue records, and request generation.

Packet ids live in ``{0 .. F-1}`` with ``F = n_files * subfiles_per_file``;
packet ``p`` belongs to file ``p // subfiles_per_file``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import SystemConfig, Uniform
from .errors import GenerationExhaustedError
from .rng import RngStream

# Rejection bound for request generation. The all-caches rejection rate is
# ~p_c**K (fractions of a percent at evaluated regimes), so hitting this
# bound means the config is degenerate (e.g. every packet cached everywhere).
MAX_GENERATION_ATTEMPTS = 10**6


@dataclass(frozen=True)
class CacheAssignment:
    """Per-cache packet-id sets, fixed for an episode.

    ``contents[k]`` is a frozenset of exactly ``floor(p_c * F)`` packet ids.
    Immutable, so cloned states may share it.
    """

    contents: tuple[frozenset[int], ...]

    def holders(self, packet: int) -> frozenset[int]:
        """Caches holding the given packet."""
        return frozenset(k for k, c in enumerate(self.contents) if packet in c)


class QueueRecord:
    """One queue entry: destination, packet set, deadline, side information.

    ``packet_set`` starts as a singleton and grows through merges;
    ``side_info`` is always exactly the set of caches holding the whole
    packet set. ``annotations`` carries the original arrival ids folded
    into this record (evaluator bookkeeping, never policy-visible).
    Only ``deadline`` mutates after creation.
    """

    __slots__ = ("dest", "packet_set", "deadline", "side_info", "annotations",
                 "insertion_order")

    def __init__(self, dest: int, packet_set: frozenset[int], deadline: int,
                 side_info: frozenset[int], annotations: frozenset[int],
                 insertion_order: int):
        self.dest = dest
        self.packet_set = packet_set
        self.deadline = deadline
        self.side_info = side_info
        self.annotations = annotations
        self.insertion_order = insertion_order

    def copy(self) -> "QueueRecord":
        return QueueRecord(self.dest, self.packet_set, self.deadline,
                           self.side_info, self.annotations, self.insertion_order)

    def size(self) -> int:
        return len(self.packet_set)

    def __repr__(self) -> str:  # pragma: no cover
        return (f"QueueRecord(dest={self.dest}, packets={sorted(self.packet_set)}, "
                f"d={self.deadline}, side={sorted(self.side_info)})")

    def __eq__(self, other) -> bool:
        if not isinstance(other, QueueRecord):
            return NotImplemented
        return (self.dest == other.dest and self.packet_set == other.packet_set
                and self.deadline == other.deadline and self.side_info == other.side_info
                and self.annotations == other.annotations
                and self.insertion_order == other.insertion_order)


def place_caches(cfg: SystemConfig, rng: RngStream) -> CacheAssignment:
    """Fixed-size random placement: each cache independently samples exactly
    ``floor(p_c * F)`` distinct packet ids, caches drawn in index order.

    Each cache's sample is the prefix of a full permutation of the packet
    ids (one draw event per cache).
    """
    m = cfg.cache_size
    f = cfg.n_packets
    if m > f:
        raise ValueError("cache size exceeds library size")
    contents = tuple(
        frozenset(int(p) for p in rng.permutation(f)[:m])
        for _ in range(cfg.n_caches)
    )
    return CacheAssignment(contents)


def gen_request(cfg: SystemConfig, caches: CacheAssignment, rng: RngStream,
                next_id: int, insertion_order: int) -> QueueRecord:
    """Draw one fresh singleton request.

    Draw order per attempt: file index from the demand law, then subfile
    index; a candidate held by every cache is rejected and redrawn. Then
    one draw picks the destination uniformly among caches that do NOT hold
    the packet, and one draw picks the deadline from {1..D}.
    """
    b = cfg.subfiles_per_file
    for _ in range(MAX_GENERATION_ATTEMPTS):
        n = cfg.sample_file(rng)
        sub = rng.integers(0, b)
        packet = n * b + sub
        holders = caches.holders(packet)
        if len(holders) < cfg.n_caches:
            admissible = [k for k in range(cfg.n_caches) if k not in holders]
            dest = admissible[rng.integers(0, len(admissible))]
            deadline = rng.integers(1, cfg.max_deadline + 1)
            return QueueRecord(
                dest=dest,
                packet_set=frozenset((packet,)),
                deadline=deadline,
                side_info=holders,
                annotations=frozenset((next_id,)),
                insertion_order=insertion_order,
            )
    raise GenerationExhaustedError(
        f"no admissible packet after {MAX_GENERATION_ATTEMPTS} attempts; "
        "every sampled packet is cached everywhere")


def pop_mass(packet_set, cfg: SystemConfig) -> float:
    """Popularity mass of a packet set: sum of file-rank probabilities over
    the file projection of every packet (one term per packet)."""
    if not packet_set:
        return 0.0
    probs = cfg.file_probs()
    b = cfg.subfiles_per_file
    return float(sum(probs[p // b] for p in packet_set))


def file_of(packet: int, cfg: SystemConfig) -> int:
    """Packet-to-file projection."""
    return packet // cfg.subfiles_per_file


def file_ids(packet_set, cfg: SystemConfig) -> frozenset[int]:
    b = cfg.subfiles_per_file
    return frozenset(p // b for p in packet_set)


__all__ = [
    "CacheAssignment", "QueueRecord", "place_caches", "gen_request",
    "pop_mass", "file_of", "file_ids", "MAX_GENERATION_ATTEMPTS", "Uniform",
]
