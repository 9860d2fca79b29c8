"""Small dense linear algebra over the prime fields F_2 and F_3.

Vectors are tuples of ints in [0, q).  Everything here operates on tiny
dimensions (n <= ~20), so clarity wins over asymptotics; the F_2 path packs
vectors into int bitmasks since it sits inside the enumeration hot loop.
"""

from __future__ import annotations

from typing import Iterable, Sequence

SUPPORTED_FIELD_ORDERS = (2, 3)


def vec_mod(vec: Sequence[int], q: int) -> tuple[int, ...]:
    return tuple(int(x) % q for x in vec)


def vec_add(a: Sequence[int], b: Sequence[int], q: int) -> tuple[int, ...]:
    return tuple((x + y) % q for x, y in zip(a, b, strict=True))


def vec_scale(a: Sequence[int], s: int, q: int) -> tuple[int, ...]:
    return tuple((x * s) % q for x in a)


def vec_is_zero(a: Sequence[int]) -> bool:
    return all(x == 0 for x in a)


def unit_vector(n: int, index: int) -> tuple[int, ...]:
    """Standard basis vector with a 1 at 1-based position `index`."""
    if not 1 <= index <= n:
        raise ValueError(f"unit vector index {index} out of range 1..{n}")
    return tuple(1 if i == index - 1 else 0 for i in range(n))


def pack_bits(vec: Sequence[int]) -> int:
    """F_2 vector -> bitmask with bit i holding coordinate i."""
    mask = 0
    for i, x in enumerate(vec):
        if x & 1:
            mask |= 1 << i
    return mask


def unpack_bits(mask: int, n: int) -> tuple[int, ...]:
    return tuple((mask >> i) & 1 for i in range(n))


class SpanBasis:
    """Incrementally built row basis of a subspace of F_q^n.

    add() reduces the vector against the current basis and, if a nonzero
    residual remains, normalizes its pivot to 1 and stores it.  contains()
    is membership in the current span.
    """

    def __init__(self, n: int, q: int, vectors: Iterable[Sequence[int]] = ()):
        if q not in (2, 3):
            raise ValueError(f"unsupported field order {q}")
        self.n = n
        self.q = q
        # pivot coordinate -> reduced row; F_2 rows are bitmasks, F_3 rows lists
        self._rows: dict[int, object] = {}
        for v in vectors:
            self.add(v)

    @property
    def rank(self) -> int:
        return len(self._rows)

    def copy(self) -> "SpanBasis":
        dup = SpanBasis(self.n, self.q)
        if self.q == 2:
            dup._rows = dict(self._rows)
        else:
            dup._rows = {p: list(row) for p, row in self._rows.items()}
        return dup

    def _reduce2(self, mask: int) -> int:
        for pivot, row in self._rows.items():
            if (mask >> pivot) & 1:
                mask ^= row
        return mask

    def _reduce3(self, vec: Sequence[int]) -> list[int]:
        out = [x % 3 for x in vec]
        for pivot, row in self._rows.items():
            coeff = out[pivot]
            if coeff:
                for i in range(self.n):
                    out[i] = (out[i] - coeff * row[i]) % 3
        return out

    def add(self, vec: Sequence[int]) -> bool:
        """Add `vec` to the span; returns True iff the rank grew."""
        if self.q == 2:
            mask = self._reduce2(pack_bits(vec))
            if mask == 0:
                return False
            pivot = (mask & -mask).bit_length() - 1
            self._rows[pivot] = mask
            return True
        out = self._reduce3(vec)
        pivot = next((i for i, x in enumerate(out) if x), None)
        if pivot is None:
            return False
        if out[pivot] == 2:  # 2 is its own inverse in F_3, so scaling by 2 normalizes the pivot

            out = [(2 * x) % 3 for x in out]
        self._rows[pivot] = out
        return True

    def contains(self, vec: Sequence[int]) -> bool:
        if self.q == 2:
            return self._reduce2(pack_bits(vec)) == 0
        return all(x == 0 for x in self._reduce3(vec))
