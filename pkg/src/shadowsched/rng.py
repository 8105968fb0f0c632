"""SplitMix64, the single pseudo-random generator used by every strategy.

SplitMix64 is a counter-based generator: the state is a 64-bit counter
advanced by a fixed odd increment, and each output is a bijective mix of
the counter.  Given a seed, the stream of outputs is fully determined, on
every platform.

    state' = (state + 0x9E3779B97F4A7C15) mod 2**64
    z      = state'
    z      = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z      = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    output = z ^ (z >> 31)

Bounded draws reject raw outputs below ``2**64 mod bound`` so that the
remaining range is an exact multiple of ``bound`` (no modulo bias).
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15

RngState = int


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def next_u64(state: RngState) -> tuple[int, RngState]:
    state = (state + GAMMA) & MASK64
    return mix64(state), state


def rng_next(state: RngState, bound: int) -> tuple[int, RngState]:
    """Draw a uniform integer in ``[0, bound)``; return it with the advanced state."""
    if bound < 1:
        raise ValueError(f"bound must be >= 1, got {bound}")
    threshold = (1 << 64) % bound
    while True:
        x, state = next_u64(state)
        if x >= threshold:
            return x % bound, state


def derive_seed(master: int, index: int) -> int:
    """Seed for iteration ``index`` of a search; depends only on position."""
    return mix64((master & MASK64) + (index + 1) * GAMMA)


class Rng:
    """Mutable convenience wrapper around :func:`rng_next`."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state: RngState = seed & MASK64

    def below(self, bound: int) -> int:
        value, self.state = rng_next(self.state, bound)
        return value

    def u64(self) -> int:
        value, self.state = next_u64(self.state)
        return value
