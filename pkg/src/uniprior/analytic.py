"""Closed-form message-error probability after combining noisy transmissions.

A receiver that recovers a message by adding c received symbols gets it wrong
exactly when an odd number of those symbols were detected wrongly.  With
independent per-symbol error probability p this has the closed form
(1 - (1 - 2p)^c) / 2, cross-checked here against the direct odd-term binomial
sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .errors import ValidationError

# binomial_oracle sums exact terms; beyond this the coefficients are huge and
# the closed form should be used instead.
BINOMIAL_EXACT_LIMIT = 64


@dataclass(frozen=True)
class ErrorParams:
    """Per-transmission error probability p and transmission count c."""

    p: float
    c: int

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"p must lie in [0, 1], got {self.p}")
        if isinstance(self.c, bool) or not isinstance(self.c, int) or self.c < 1:
            raise ValidationError(f"c must be a positive integer, got {self.c!r}")


def message_error_prob(params: ErrorParams) -> float:
    """Probability that a sum of c symbols, each wrong with probability p, errs."""
    return (1.0 - (1.0 - 2.0 * params.p) ** params.c) / 2.0


def binomial_oracle(params: ErrorParams) -> float:
    """Direct odd-term binomial sum: P(odd number of the c symbols err)."""
    if params.c > BINOMIAL_EXACT_LIMIT:
        raise ValidationError(
            f"binomial_oracle is limited to c <= {BINOMIAL_EXACT_LIMIT}, got {params.c}"
        )
    p = params.p
    return sum(
        comb(params.c, i) * p**i * (1.0 - p) ** (params.c - i)
        for i in range(1, params.c + 1, 2)
    )


def error_increment(params: ErrorParams) -> float:
    """Increase in message error when the count rises from c to c + 1.

    Positive for 0 < p < 0.5, which is why fewer combined transmissions always
    means a more reliable message in that regime.
    """
    return (1.0 - 2.0 * params.p) ** params.c * params.p


def tabulate(p_values, c_values) -> str:
    """CSV table of message_error_prob over a (p, c) grid."""
    lines = ["p,c,prob"]
    for p in p_values:
        for c in c_values:
            prob = message_error_prob(ErrorParams(p=float(p), c=int(c)))
            lines.append(f"{p:g},{c},{prob:.12g}")
    return "\n".join(lines) + "\n"
