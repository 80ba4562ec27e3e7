"""Lazily realized samples of a program's probabilistic facts."""

from __future__ import annotations

import hashlib
import struct

from .program import GroundFactId, GroundingTable, Program
from .terms import format_term

__all__ = ["SampleState", "draw_uniform", "UNSAMPLED", "IN", "OUT"]

UNSAMPLED, IN, OUT = 0, 1, 2

_TWO_64 = float(2**64)
_PACK2 = struct.Struct("<QQ").pack
_PACK1 = struct.Struct("<Q").pack


def draw_uniform(seed: int, sample_index: int, key: bytes) -> float:
    """Uniform number in [0, 1) determined by (seed, sample index, fact key)."""
    digest = hashlib.blake2b(_PACK2(seed, sample_index) + key, digest_size=8).digest()
    return int.from_bytes(digest, "little") / _TWO_64


class SampleState:
    """Three-valued membership array for one sampled program.

    ``values[fact_id]`` is 0 (not sampled yet), 1 (in the sample) or
    2 (not in the sample).  Groundings of non-ground facts live in the
    ``overflow`` dict.  Draws are a pure function of the seed, the sample
    index and the fact, so lazy and eager realization agree.
    """

    def __init__(self, program: Program, seed: int = 0, grounding: GroundingTable | None = None):
        self.program = program
        self.seed = seed & 0xFFFFFFFFFFFFFFFF
        self.grounding = grounding if grounding is not None else GroundingTable(program)
        self._n = len(program.facts)
        self._probs = [f.prob.value for f in program.facts]
        self._keys = [_PACK1(i) for i in range(self._n)]
        self.values = bytearray(self._n)
        self.overflow: dict[GroundFactId, int] = {}
        self.sample_index = 0
        self._hasher = hashlib.blake2b(_PACK2(self.seed, 0), digest_size=8)

    def reset(self, sample_index: int) -> None:
        self.sample_index = sample_index
        self.values = bytearray(self._n)
        self.overflow.clear()
        self._hasher = hashlib.blake2b(_PACK2(self.seed, sample_index & 0xFFFFFFFFFFFFFFFF), digest_size=8)

    def _draw(self, key: bytes, p: float) -> int:
        h = self._hasher.copy()
        h.update(key)
        u = int.from_bytes(h.digest(), "little") / _TWO_64
        return IN if u < p else OUT

    def _grounding_key(self, gid: GroundFactId) -> bytes:
        instance = self.grounding.instance(gid)
        return _PACK1(gid.fact_id) + format_term(instance).encode("utf-8")

    def holds(self, gid: GroundFactId) -> bool:
        """Membership of ``gid`` in the current sample, drawing it on first use."""
        fid, g = gid
        if g == 0:
            v = self.values[fid]
            if v == UNSAMPLED:
                v = self.values[fid] = self._draw(self._keys[fid], self._probs[fid])
            return v == IN
        v = self.overflow.get(gid, UNSAMPLED)
        if v == UNSAMPLED:
            v = self.overflow[gid] = self._draw(self._grounding_key(gid), self._probs[fid])
        return v == IN

    def set(self, gid: GroundFactId, present: bool) -> None:
        v = IN if present else OUT
        if gid.grounding_index == 0:
            self.values[gid.fact_id] = v
        else:
            self.overflow[gid] = v

    def status(self, gid: GroundFactId) -> int:
        if gid.grounding_index == 0:
            return self.values[gid.fact_id]
        return self.overflow.get(gid, UNSAMPLED)

    def realize_all(self) -> None:
        """Eagerly draw every declared ground fact of the program."""
        for fact in self.program.facts:
            if fact.ground:
                self.holds(fact.gid)
