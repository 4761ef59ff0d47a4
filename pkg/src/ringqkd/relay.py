"""Redundant XOR key forwarding over the satellite ring and its security oracle.

The ring between the two ground-station attachment satellites splits into two
directed segments (clockwise "plus", counterclockwise "minus").  Along each
segment every pair of nodes at ring distance 2..r shares a twin-field key and
each ground station shares a point-to-point key with its attachment
satellite.  Alice masks an n-bit secret with all keys she holds and each node
in turn XORs in every key it holds, so the message after node j always equals

    X  XOR  (all keys crossing the cut between j and j+1),

and Bob's final XOR recovers X.  Each segment uses fresh independent keys;
the end-to-end secret is X_ring = X_plus XOR X_minus (XORed across rings when
several independent rings run in parallel).

Adversary model: every forwarded message is public, a compromised satellite
reveals every key it holds, and ground stations are never compromised.  Keys
are independent uniform strings, so "the adversary can reconstruct the
secret" is exactly a linear-algebra question over GF(2) with one symbol per
key and per segment secret; ``adversary_can_recover`` decides it by Gaussian
elimination, independent of the key length.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

from .constants import ATM_SHELL_KM, EARTH_RADIUS_KM

GS1 = "GS1"
GS2 = "GS2"


@dataclass(frozen=True)
class CompromiseScenario:
    """Set of compromised satellites, as indices or (ring, index) pairs."""

    compromised: frozenset

    def per_ring(self, n_rings: int) -> dict[int, frozenset]:
        plain = set()
        tagged: dict[int, set] = {r: set() for r in range(n_rings)}
        for item in self.compromised:
            if isinstance(item, tuple):
                ring, sat = item
                if ring not in tagged:
                    raise ValueError(f"ring index out of range: {ring}")
                tagged[ring].add(sat)
            else:
                plain.add(item)
        return {r: frozenset(tagged[r] | plain) for r in range(n_rings)}


@dataclass(frozen=True)
class RingPath:
    """Both forwarding segments of one (or several stacked) rings."""

    n_sats: int
    attach_a: int
    attach_b: int
    neighbor_range: int = 2
    n_rings: int = 1
    walks: dict = field(default_factory=dict, compare=False)

    @property
    def segment_plus(self) -> tuple:
        return self.walks[(0, "plus")]

    @property
    def segment_minus(self) -> tuple:
        return self.walks[(0, "minus")]


def build_paths(n_sats: int, i: int, k: int, r: int = 2, n_rings: int = 1) -> RingPath:
    """Construct the two directed segments GS1 -> S_i -> ... -> S_k -> GS2."""
    if n_sats < 3:
        raise ValueError("need at least three satellites")
    if not (0 <= i < n_sats and 0 <= k < n_sats):
        raise ValueError("attachment indices out of range")
    if i == k:
        raise ValueError("attachment satellites must differ")
    if n_rings < 1:
        raise ValueError("n_rings must be >= 1")
    plus_sats = [(i + s) % n_sats for s in range((k - i) % n_sats + 1)]
    minus_sats = [(i - s) % n_sats for s in range((i - k) % n_sats + 1)]
    if r < 2:
        raise ValueError("neighbor_range must be >= 2")
    if r > min(len(plus_sats), len(minus_sats)):
        raise ValueError(f"neighbor_range {r} too large for this attachment split")
    walks = {}
    for ring in range(n_rings):
        walks[(ring, "plus")] = tuple([GS1] + plus_sats + [GS2])
        walks[(ring, "minus")] = tuple([GS1] + minus_sats + [GS2])
    return RingPath(n_sats, i, k, r, n_rings, walks)


def segment_keys(path: RingPath, ring: int, segment: str) -> list[tuple]:
    """Key identities of one segment, as (ring, segment, kind, slot_u, slot_v).

    Twin-field keys join slots at distance 2..r; point-to-point keys join
    each ground station to its attachment satellite.
    """
    walk = path.walks[(ring, segment)]
    m = len(walk) - 1
    keys = [(ring, segment, "p2p", 0, 1), (ring, segment, "p2p", m - 1, m)]
    for u in range(m + 1):
        for d in range(2, path.neighbor_range + 1):
            if u + d <= m:
                keys.append((ring, segment, "tf", u, u + d))
    return keys


def key_nodes(path: RingPath, key_id: tuple):
    ring, segment, _, u, v = key_id
    walk = path.walks[(ring, segment)]
    return walk[u], walk[v]


def generate_link_keys(path: RingPath, key_len: int, seed: int) -> dict:
    """Fresh independent uniform keys for every prescribed pair, per segment."""
    if key_len < 1:
        raise ValueError("key_len must be >= 1")
    rng = random.Random(seed)
    keys = {}
    for ring in range(path.n_rings):
        for segment in ("plus", "minus"):
            for kid in segment_keys(path, ring, segment):
                keys[kid] = rng.getrandbits(key_len)
    return keys


@dataclass(frozen=True)
class ForwardTranscript:
    """Public messages of one segment run: (sending node, value) per hop."""

    ring: int
    segment: str
    messages: tuple
    secret: int  # held by Alice; kept for round-trip checks


def _keys_at_slot(path: RingPath, ring: int, segment: str, slot: int) -> list[tuple]:
    return [k for k in segment_keys(path, ring, segment) if slot in (k[3], k[4])]


def forward(path: RingPath, segment: str, x: int, keys: dict, ring: int = 0) -> ForwardTranscript:
    """Run the masked forwarding chain of one segment; returns all messages."""
    walk = path.walks[(ring, segment)]
    messages = []
    value = x
    for slot in range(len(walk) - 1):  # every sender except Bob
        for kid in _keys_at_slot(path, ring, segment, slot):
            if kid not in keys:
                raise KeyError(f"missing link key {kid}")
            value ^= keys[kid]
        messages.append((walk[slot], value))
    return ForwardTranscript(ring, segment, tuple(messages), x)


def recover(path: RingPath, transcript: ForwardTranscript, keys: dict) -> int:
    """Bob's unmasking of the final forwarded message."""
    if not transcript.messages:
        raise ValueError("empty transcript")
    walk = path.walks[(transcript.ring, transcript.segment)]
    if len(transcript.messages) != len(walk) - 1:
        raise ValueError("transcript is missing hops")
    value = transcript.messages[-1][1]
    bob = len(walk) - 1
    for kid in _keys_at_slot(path, transcript.ring, transcript.segment, bob):
        if kid not in keys:
            raise KeyError(f"missing link key {kid}")
        value ^= keys[kid]
    return value


def crossing_keys(path: RingPath, ring: int, segment: str, cut: int) -> list[tuple]:
    """Keys whose slot pair straddles the cut between slot ``cut`` and cut+1."""
    return [
        k for k in segment_keys(path, ring, segment) if k[3] <= cut < k[4]
    ]


# ------------------------------------------------------------- GF(2) oracle


def _gf2_solve(rows: list[int], target: int):
    """Is ``target`` in the GF(2) span of ``rows``?  Returns (bool, row subset)."""
    pivots: list[tuple[int, int, int]] = []  # (pivot bit, vector, combo mask)
    for idx, vec in enumerate(rows):
        combo = 1 << idx
        for pbit, pvec, pcombo in pivots:
            if vec & pbit:
                vec ^= pvec
                combo ^= pcombo
        if vec:
            pivots.append((vec & -vec, vec, combo))
    t = target
    combo = 0
    for pbit, pvec, pcombo in pivots:
        if t & pbit:
            t ^= pvec
            combo ^= pcombo
    if t:
        return False, []
    return True, [i for i in range(len(rows)) if combo >> i & 1]


def _knowledge_rows(path: RingPath, compromised_per_ring: dict):
    """Symbol-space rows the adversary knows: messages plus compromised keys."""
    key_ids = []
    for ring in range(path.n_rings):
        for segment in ("plus", "minus"):
            key_ids.extend(segment_keys(path, ring, segment))
    key_bit = {kid: 1 << i for i, kid in enumerate(key_ids)}
    nkeys = len(key_ids)
    secret_bit = {}
    for ring in range(path.n_rings):
        secret_bit[(ring, "plus")] = 1 << (nkeys + 2 * ring)
        secret_bit[(ring, "minus")] = 1 << (nkeys + 2 * ring + 1)

    rows = []
    labels = []
    for ring in range(path.n_rings):
        for segment in ("plus", "minus"):
            walk = path.walks[(ring, segment)]
            for cut in range(len(walk) - 1):
                vec = secret_bit[(ring, segment)]
                for kid in crossing_keys(path, ring, segment, cut):
                    vec ^= key_bit[kid]
                rows.append(vec)
                labels.append(("message", ring, segment, walk[cut]))
        for sat in sorted(compromised_per_ring.get(ring, ())):
            for kid in key_ids:
                if kid[0] != ring:
                    continue
                if sat in key_nodes(path, kid):
                    rows.append(key_bit[kid])
                    labels.append(("key", kid))
    target_all = 0
    for ring in range(path.n_rings):
        target_all ^= secret_bit[(ring, "plus")] ^ secret_bit[(ring, "minus")]
    targets = {"ring": target_all}
    targets["plus"] = secret_bit[(0, "plus")]
    targets["minus"] = secret_bit[(0, "minus")]
    return rows, labels, targets


def adversary_can_recover(
    path: RingPath, scenario: CompromiseScenario, target: str = "ring"
) -> tuple[bool, list]:
    """Exact recoverability of the secret from public messages plus leaks.

    ``target`` selects the end-to-end ring secret (default) or a single
    segment secret ("plus" / "minus", ring 0).  The witness lists the
    knowledge items whose XOR yields the secret, when recoverable.
    """
    per_ring = scenario.per_ring(path.n_rings)
    for ring, sats in per_ring.items():
        for s in sats:
            if not isinstance(s, int) or not 0 <= s < path.n_sats:
                raise ValueError(f"bad compromised satellite index: {s!r}")
    rows, labels, targets = _knowledge_rows(path, per_ring)
    if target not in targets:
        raise ValueError(f"unknown target: {target}")
    ok, combo = _gf2_solve(rows, targets[target])
    return ok, [labels[i] for i in combo]


@dataclass(frozen=True)
class MinCompromiseResult:
    exact: bool
    size: int | None
    example: tuple
    lower: int
    upper: int | None


def _canonical_upper(path: RingPath, allow_attachments: bool, target: str) -> int | None:
    """Size of a known recovering construction, used for search brackets."""
    r, n, a = path.neighbor_range, path.n_sats, path.attach_a
    if allow_attachments:
        cand = frozenset((a + d) % n for d in range(-(r - 1), r))
    else:
        cand = frozenset((a + 1 + d) % n for d in range(r)) | frozenset(
            (a - 1 - d) % n for d in range(r)
        )
    if not allow_attachments and (path.attach_a in cand or path.attach_b in cand):
        return None
    ok, _ = adversary_can_recover(path, CompromiseScenario(cand), target)
    return len(cand) if ok else None


def min_compromise(
    path: RingPath,
    allow_attachments: bool = True,
    target: str = "ring",
    max_evals: int = 500_000,
) -> MinCompromiseResult:
    """Smallest compromised-satellite set that recovers the secret.

    Rings are independent, so the multi-ring minimum is the sum of
    single-ring minima (the example set concatenates per-ring examples).
    Within a ring the search enumerates subsets in size then lexicographic
    order, so the reported example is the lexicographically smallest
    minimal set.  If the enumeration budget runs out a certified
    lower/upper bracket is returned instead.
    """
    single = build_paths(
        path.n_sats, path.attach_a, path.attach_b, path.neighbor_range, n_rings=1
    )
    candidates = list(range(path.n_sats))
    if not allow_attachments:
        candidates = [s for s in candidates if s not in (path.attach_a, path.attach_b)]
    evals = 0
    found_size = None
    example: tuple = ()
    cap = min(len(candidates), 2 * (2 * path.neighbor_range - 1))
    proven_lower = 1
    for size in range(1, cap + 1):
        for combo in itertools.combinations(candidates, size):
            evals += 1
            if evals > max_evals:
                upper = _canonical_upper(single, allow_attachments, target)
                return MinCompromiseResult(
                    False, None, example, proven_lower * path.n_rings,
                    None if upper is None else upper * path.n_rings,
                )
            ok, _ = adversary_can_recover(single, CompromiseScenario(frozenset(combo)), target)
            if ok:
                found_size = size
                example = combo
                break
        if found_size is not None:
            break
        proven_lower = size + 1
    if found_size is None:
        return MinCompromiseResult(True, None, (), proven_lower, None)
    per_ring_size = found_size
    total = per_ring_size * path.n_rings
    full_example = tuple(
        (ring, sat) for ring in range(path.n_rings) for sat in example
    ) if path.n_rings > 1 else example
    return MinCompromiseResult(True, total, full_example, total, total)


def feasible_neighbor_range(
    n_sats: int,
    isl_budget_db: float,
    optics=None,
    h_atm_km: float = ATM_SHELL_KM,
    altitude_km: float = 500.0,
    include_pointing: bool = False,
) -> int:
    """Largest usable twin-field neighbour range under an ISL loss budget.

    A range-r key between S_j and S_(j+r) is measured at the node adjacent
    to one endpoint, so its longest optical arm spans ring distance r - 1.
    That arm's chord must stay inside the loss budget and clear the
    atmospheric shell.  Pointing loss is excluded by default, matching the
    published feasibility envelope where the budget refers to the
    optics-plus-geometry loss alone.
    """
    from .linkbudget import OpticalParams, isl_efficiency, to_db

    if n_sats < 3:
        raise ValueError("need at least three satellites")
    optics = optics or OpticalParams()
    radius = EARTH_RADIUS_KM + altitude_km
    r = 1
    while True:
        arm = r  # candidate range r+1 has longest arm r
        if arm >= n_sats / 2.0:
            break
        chord_km = 2.0 * radius * math.sin(arm * math.pi / n_sats)
        clear = radius * math.cos(arm * math.pi / n_sats) > EARTH_RADIUS_KM + h_atm_km
        loss = to_db(isl_efficiency(chord_km * 1e3, optics, include_pointing=include_pointing))
        if clear and loss <= isl_budget_db:
            r += 1
        else:
            break
    return r
