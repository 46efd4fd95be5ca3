"""Data-plane building blocks: node clocks, damper headers, ingress shaping, gated ports."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

BILLION = 10**9


class QueueBoundFault(RuntimeError):
    """A parent node reported more queuing delay than its advertised bound."""


class ReservationOverflow(RuntimeError):
    """A packet cannot fit the per-reservation byte budget of its pattern."""


@dataclass(frozen=True)
class NodeClock:
    """Cycle boundaries of one node: offset + n*T*(1 + drift), rounded to whole ns."""

    T: int
    offset: int = 0
    drift_ppm: float = 0.0

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("cycle length must be positive")
        if abs(self.drift_ppm) > 1000:
            raise ValueError(f"drift {self.drift_ppm} ppm outside +-1000")

    @cached_property
    def _scale(self) -> int:
        return BILLION + round(self.drift_ppm * 1000)

    def boundary(self, n: int) -> int:
        return self.offset + (n * self.T * self._scale + BILLION // 2) // BILLION

    def cycle_after(self, t: int) -> int:
        """Index of the first boundary strictly after t."""
        n = (t - self.offset) * BILLION // (self.T * self._scale)
        while self.boundary(n) <= t:
            n += 1
        while self.boundary(n - 1) > t:
            n -= 1
        return n

    def local_T(self, n: int) -> int:
        return self.boundary(n + 1) - self.boundary(n)


@dataclass(frozen=True)
class DamperHeader:
    q_prev: int
    Q_prev: int


def compute_eligibility(t_in: int, P_next: int, header: DamperHeader) -> int:
    """Release time at the child: arrival + processing + the parent's unused queuing budget."""
    if header.q_prev < 0 or header.q_prev > header.Q_prev:
        raise QueueBoundFault(f"parent queued {header.q_prev} ns against a bound of {header.Q_prev} ns")
    return t_in + P_next + (header.Q_prev - header.q_prev)


def record_departure(E: int, t_out: int, Q: int) -> DamperHeader:
    if t_out < E:
        raise ValueError(f"departure {t_out} precedes eligibility {E}")
    return DamperHeader(t_out - E, Q)


def serialization_ns(size_bytes: int, rate_bps: int) -> int:
    return -(-size_bytes * 8 * BILLION // rate_bps)


@dataclass
class IngressShaper:
    """Per-flow shaper at the ingress gateway.

    Reservation j of the gateway clock is usable when (j - phase) % m == 0 and
    carries at most ``b_prime`` bytes. Backlog carries over to later reservations.
    """

    clock: NodeClock
    m: int
    b_prime: int
    phase: int = 0
    _next: int | None = None
    _used: int = 0

    def first_reservation_at_or_after(self, t: int) -> int:
        j = self.clock.cycle_after(t - 1)
        return j + (self.phase - j) % self.m

    def inject(self, t: int, sizes) -> list[int]:
        """Eligibility time of each packet of a burst arriving at t."""
        j0 = self.first_reservation_at_or_after(t)
        if self._next is None or self._next < j0:
            self._next, self._used = j0, 0
        out = []
        for size in sizes:
            if size > self.b_prime:
                raise ReservationOverflow(f"packet of {size} B exceeds the {self.b_prime} B reservation")
            if self._used + size > self.b_prime:
                self._next += self.m
                self._used = 0
            self._used += size
            out.append(self.clock.boundary(self._next))
        return out


def igw_inject(burst_sizes, t: int, shaper: IngressShaper) -> list[tuple[int, int]]:
    """Split a burst over consecutive reservations: (packet index, E0) per packet."""
    return list(enumerate(shaper.inject(t, burst_sizes)))


def packetize(burst_bytes: int, max_packet: int) -> list[int]:
    full, rest = divmod(burst_bytes, max_packet)
    return [max_packet] * full + ([rest] if rest else [])


@dataclass
class PortScheduler:
    """N gate-controlled queues, opened one per cycle in cyclic order, plus a best-effort FIFO."""

    clock: NodeClock
    rate_bps: int
    N: int = 3
    slots: list = field(default_factory=list)
    link_free: int = 0

    def __post_init__(self):
        if self.N < 3:
            raise ValueError("need at least 3 gated queues per port")
        # each slot: [cycle index it is filling, list of (E, tiebreak, item)]
        self.slots = [[None, []] for _ in range(self.N)]

    def enqueue(self, item, E: int, tiebreak: int = 0) -> tuple[int, int, int]:
        """Place item in the queue opening first strictly after E: (queue index, cycle, opening time)."""
        k = self.clock.cycle_after(E)
        qi = k % self.N
        slot = self.slots[qi]
        if slot[0] != k:
            if slot[1]:
                raise RuntimeError(f"queue {qi} still holds cycle {slot[0]} when cycle {k} arrives")
            slot[0] = k
        slot[1].append((E, tiebreak, item))
        return qi, k, self.clock.boundary(k)

    def open(self, k: int) -> list:
        """Contents of the queue for cycle k in eligibility order, emptying it."""
        slot = self.slots[k % self.N]
        if slot[0] != k:
            return []
        items = sorted(slot[1], key=lambda e: (e[0], e[1]))
        slot[1] = []
        return [it for _, _, it in items]

    def serialization(self, size_bytes: int) -> int:
        return serialization_ns(size_bytes, self.rate_bps)


def enqueue_after_eligibility(scheduler: PortScheduler, packet, E: int) -> tuple[int, int]:
    qi, _, opening = scheduler.enqueue(packet, E)
    return qi, opening
