"""16-input sorting networks co-evolving against parasite number sequences.

A network is an ordered list of compare-exchange swaps over channels 0..15
(serialized 1-based as "lo:hi" tokens). A parasite is a permutation of
0..15. A game applies the network to the parasite and counts output
positions already in sorted order; the parasite scores the complement, so
every game is constant-sum at 16.

Perfection checks use the zero-one principle: a network sorts everything
iff it sorts all 2^16 binary inputs. Those inputs are evaluated in parallel
as 65536-bit integer columns, one per channel, making full verification a
few hundred big-integer operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_CHANNELS = 16
MAX_SCORE = 16
BONUS_FULL_AT = 60
BONUS_ZERO_AT = 120
MUTATION_RATE = 0.25
INIT_SWAPS = (60, 80)


@dataclass(frozen=True, slots=True)
class SortingNetwork:
    """Comparator list; each swap (lo, hi) moves the smaller value to lo."""

    swaps: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.swaps:
            raise ValueError("a network needs at least one swap")
        for lo, hi in self.swaps:
            if not (0 <= lo < hi < N_CHANNELS):
                raise ValueError(f"invalid swap ({lo}, {hi})")

    def __len__(self) -> int:
        return len(self.swaps)

    def to_text(self) -> str:
        """Whitespace-separated 1-based lo:hi tokens."""
        return " ".join(f"{lo + 1}:{hi + 1}" for lo, hi in self.swaps)

    @classmethod
    def from_text(cls, text: str) -> "SortingNetwork":
        swaps = []
        for token in text.split():
            lo_s, _, hi_s = token.partition(":")
            lo, hi = int(lo_s) - 1, int(hi_s) - 1
            if lo > hi:
                lo, hi = hi, lo
            swaps.append((lo, hi))
        return cls(tuple(swaps))


def apply_network(net: SortingNetwork, values) -> np.ndarray:
    """Run every compare-exchange in order over one input sequence."""
    out = np.array(values, copy=True)
    for lo, hi in net.swaps:
        if out[lo] > out[hi]:
            out[lo], out[hi] = out[hi], out[lo]
    return out


def score_interaction(net: SortingNetwork, parasite: np.ndarray) -> tuple[int, int]:
    """(network score, parasite score): positions sorted vs. the complement."""
    out = apply_network(net, parasite)
    net_score = int(np.sum(out == np.sort(np.asarray(parasite))))
    return net_score, MAX_SCORE - net_score


def size_bonus(swap_count: int) -> float:
    """Extra fitness unit for compact perfect networks.

    1 at or below 60 swaps, 0 at or above 120, linear in between. Callers
    apply it only to networks whose whole outcome row is perfect.
    """
    if swap_count <= BONUS_FULL_AT:
        return 1.0
    if swap_count >= BONUS_ZERO_AT:
        return 0.0
    return (BONUS_ZERO_AT - swap_count) / (BONUS_ZERO_AT - BONUS_FULL_AT)


# -- reproduction -----------------------------------------------------------


def _random_swap(rng: np.random.Generator) -> tuple[int, int]:
    pair = rng.choice(N_CHANNELS, size=2, replace=False)
    lo, hi = int(pair.min()), int(pair.max())
    return lo, hi


def random_network(rng: np.random.Generator) -> SortingNetwork:
    """Initial network: uniform length in [60, 80], uniform random swaps."""
    length = int(rng.integers(INIT_SWAPS[0], INIT_SWAPS[1] + 1))
    return SortingNetwork(tuple(_random_swap(rng) for _ in range(length)))


def mutate_network(
    net: SortingNetwork, rng: np.random.Generator, fired: list | None = None
) -> SortingNetwork:
    """Each of add / remove / move / randomize fires independently at 25%.

    Removal is skipped when the network holds a single swap. Net length
    change per call is therefore -1, 0, or +1. `fired`, when given, collects
    the per-call fire flags (test instrumentation).
    """
    fires = rng.random(4) < MUTATION_RATE
    if fired is not None:
        fired.append(fires)
    swaps = list(net.swaps)
    if fires[0]:
        swaps.insert(int(rng.integers(len(swaps) + 1)), _random_swap(rng))
    if fires[1] and len(swaps) > 1:
        swaps.pop(int(rng.integers(len(swaps))))
    if fires[2]:
        moved = swaps.pop(int(rng.integers(len(swaps))))
        swaps.insert(int(rng.integers(len(swaps) + 1)), moved)
    if fires[3]:
        swaps[int(rng.integers(len(swaps)))] = _random_swap(rng)
    return SortingNetwork(tuple(swaps))


def random_parasite(rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation of 0..15."""
    return rng.permutation(N_CHANNELS).astype(np.int8)


def mutate_parasite(parasite: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exchange two distinct random positions; multiset preserved."""
    out = parasite.copy()
    i, j = rng.choice(N_CHANNELS, size=2, replace=False)
    out[i], out[j] = out[j], out[i]
    return out


# -- verification -----------------------------------------------------------

_BINARY_COLUMNS: list[int] | None = None


def _binary_columns() -> list[int]:
    """Channel columns over all 2^16 binary inputs, one 65536-bit int each.

    Bit i of column c is channel c's value in input i, i.e. bit c of i.
    """
    global _BINARY_COLUMNS
    if _BINARY_COLUMNS is None:
        total = 1 << N_CHANNELS
        cols = []
        for c in range(N_CHANNELS):
            width = 1 << c
            chunk = ((1 << width) - 1) << width
            period = width * 2
            cols.append(chunk * (((1 << total) - 1) // ((1 << period) - 1)))
        _BINARY_COLUMNS = cols
    return _BINARY_COLUMNS


def verify_network(net: SortingNetwork) -> bool:
    """True iff the network sorts every input (zero-one principle)."""
    cols = list(_binary_columns())
    for lo, hi in net.swaps:
        a, b = cols[lo], cols[hi]
        cols[lo] = a & b
        cols[hi] = a | b
    for c in range(N_CHANNELS - 1):
        if cols[c] & ~cols[c + 1]:
            return False
    return True


def batcher_network(n: int = N_CHANNELS) -> SortingNetwork:
    """Odd-even mergesort comparator network (63 swaps for 16 channels)."""

    def merge(lo: int, hi: int, r: int):
        step = r * 2
        if step < hi - lo:
            yield from merge(lo, hi, step)
            yield from merge(lo + r, hi, step)
            for i in range(lo + r, hi - r, step):
                yield (i, i + r)
        else:
            yield (lo, lo + r)

    def sort_range(lo: int, hi: int):
        if hi - lo >= 1:
            mid = lo + (hi - lo) // 2
            yield from sort_range(lo, mid)
            yield from sort_range(mid + 1, hi)
            yield from merge(lo, hi, 1)

    return SortingNetwork(tuple(sort_range(0, n - 1)))


# -- batch evaluation (engine hot path) --------------------------------------


def pack_networks(networks: list[SortingNetwork]) -> np.ndarray:
    """(n_networks, L_max, 2) int8 swap tensor, padded with (0, 0) no-ops."""
    l_max = max(len(net) for net in networks)
    tensor = np.zeros((len(networks), l_max, 2), dtype=np.int8)
    for i, net in enumerate(networks):
        arr = np.array(net.swaps, dtype=np.int8)
        tensor[i, : len(arr)] = arr
    return tensor


def play_games(
    swap_tensor: np.ndarray,
    net_idx: np.ndarray,
    parasite_values: np.ndarray,
) -> np.ndarray:
    """Network scores for games pairing swap_tensor[net_idx[i]] against
    parasite_values[i]; all games advance one comparator per step.

    Padded (0, 0) swaps compare a channel with itself and are no-ops.
    """
    vals = np.array(parasite_values, dtype=np.int8, copy=True)
    targets = np.sort(vals, axis=1)
    rows = np.arange(vals.shape[0])
    steps = swap_tensor[net_idx]
    for t in range(steps.shape[1]):
        lo = steps[:, t, 0]
        hi = steps[:, t, 1]
        a = vals[rows, lo]
        b = vals[rows, hi]
        vals[rows, lo] = np.minimum(a, b)
        vals[rows, hi] = np.maximum(a, b)
    return (vals == targets).sum(axis=1).astype(np.int64)
