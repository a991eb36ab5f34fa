"""Certainty-factor arithmetic.

Maps likelihood ratios to certainty factors and back, and implements the
parallel, sequential and antecedent combination functions used to propagate
CFs through an inference network.

The parallel combination is the revised (1984) MYCIN form whose mixed-sign
case divides by ``1 - min(|x|, |y|)``.  With that form,
``combine_parallel(cf_from_lambda(a), cf_from_lambda(b)) == cf_from_lambda(a * b)``
for every pair of finite positive ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Literal, Sequence

from cfaudit.errors import ContradictionError, UndefinedRatioError

#: Absolute tolerance for equality of CFs and probabilities.
EQUALITY_TOLERANCE: float = 1e-9

CertaintyFactor = float
AntecedentKind = Literal["and", "or"]


@dataclass(frozen=True)
class LikelihoodRatio:
    """lambda = p(E | H, e) / p(E | ~H, e).

    ``math.inf`` is only produced by :meth:`of` for a zero denominator with a
    positive numerator; the 0/0 case is the separate :data:`UNDEFINED` value.
    """

    value: float
    undefined: bool = False

    def __post_init__(self) -> None:
        if self.undefined:
            return
        if math.isnan(self.value) or self.value < 0:
            raise ValueError(f"likelihood ratio must be >= 0, got {self.value!r}")

    @classmethod
    def of(cls, numerator: float, denominator: float) -> "LikelihoodRatio":
        if denominator == 0:
            return UNDEFINED if numerator == 0 else INFINITE
        return cls(numerator / denominator)

    @property
    def is_infinite(self) -> bool:
        return not self.undefined and math.isinf(self.value)

    def __float__(self) -> float:
        if self.undefined:
            raise UndefinedRatioError("evidence impossible under both H and ~H")
        return self.value

    def __str__(self) -> str:
        if self.undefined:
            return "undefined"
        if self.is_infinite:
            return "inf"
        return repr(self.value)


INFINITE = LikelihoodRatio(math.inf)
UNDEFINED = LikelihoodRatio(math.nan, undefined=True)


def _as_ratio(value: LikelihoodRatio | float) -> LikelihoodRatio:
    if isinstance(value, LikelihoodRatio):
        return value
    if math.isinf(value) and value > 0:
        return INFINITE
    return LikelihoodRatio(float(value))


def check_cf(value: float, name: str = "certainty factor") -> CertaintyFactor:
    """Return *value* as a float, raising if it lies outside [-1, 1]."""
    value = float(value)
    if math.isnan(value) or not -1.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [-1, 1], got {value!r}")
    return value


_BELOW_ONE = math.nextafter(1.0, 0.0)


def _clamp(value: float) -> CertaintyFactor:
    return max(-1.0, min(1.0, value))


# ---------------------------------------------------------------------- #
# lambda <-> CF
# ---------------------------------------------------------------------- #


def cf_from_lambda(ratio: LikelihoodRatio | float) -> CertaintyFactor:
    """Monotone map from a likelihood ratio onto [-1, 1].

    (l - 1) / l for l >= 1, l - 1 for l <= 1; infinity maps to 1.
    """
    lam = _as_ratio(ratio)
    if lam.undefined:
        raise UndefinedRatioError("evidence impossible under both H and ~H")
    if lam.is_infinite:
        return 1.0
    if lam.value == 0:
        return -1.0
    if lam.value >= 1:
        return (lam.value - 1.0) / lam.value
    return lam.value - 1.0


def lambda_from_cf(cf: CertaintyFactor) -> LikelihoodRatio:
    """Exact inverse of :func:`cf_from_lambda`."""
    cf = check_cf(cf)
    if cf == 1.0:
        return INFINITE
    if cf >= 0:
        return LikelihoodRatio(1.0 / (1.0 - cf))
    return LikelihoodRatio(cf + 1.0)


# ---------------------------------------------------------------------- #
# Combination functions
# ---------------------------------------------------------------------- #


def combine_parallel(x: CertaintyFactor, y: CertaintyFactor) -> CertaintyFactor:
    """Combine two CFs bearing on the same hypothesis."""
    x = check_cf(x)
    y = check_cf(y)
    if (x == 1.0 and y == -1.0) or (x == -1.0 and y == 1.0):
        raise ContradictionError("contradictory categorical evidence")
    if x >= 0 and y >= 0:
        return _clamp(x + y * (1.0 - x))
    if x <= 0 and y <= 0:
        return _clamp(x + y * (1.0 + x))
    return _clamp((x + y) / (1.0 - min(abs(x), abs(y))))


def combine_all(cfs: Iterable[CertaintyFactor]) -> CertaintyFactor:
    """Parallel-combine any number of CFs independently of their order.

    Same-sign contributions are folded first (the same-sign forms are
    commutative and associative), then the two partial results are combined
    once with the mixed-sign form.  Only contributions of exactly +1 and -1
    contradict each other; a fold that merely rounds to +-1 is kept just
    inside the range.
    """
    values = [check_cf(cf) for cf in cfs]
    positive = sorted(v for v in values if v > 0)
    negative = sorted((v for v in values if v < 0), reverse=True)
    total_pos = reduce(combine_parallel, positive, 0.0)
    total_neg = reduce(combine_parallel, negative, 0.0)
    if total_pos == 1.0 and total_neg == -1.0:
        if 1.0 not in positive:
            total_pos = _BELOW_ONE
        if -1.0 not in negative:
            total_neg = -_BELOW_ONE
    return combine_parallel(total_pos, total_neg)


def chain_sequential(cf_rule: CertaintyFactor, cf_antecedent: CertaintyFactor) -> CertaintyFactor:
    """Attenuate a rule's CF by the belief in its antecedent."""
    cf_rule = check_cf(cf_rule, "rule CF")
    cf_antecedent = check_cf(cf_antecedent, "antecedent CF")
    return cf_rule * max(0.0, cf_antecedent)


def combine_antecedent(kind: AntecedentKind, parts: Sequence[CertaintyFactor]) -> CertaintyFactor:
    """min over parts for a conjunction, max for a disjunction."""
    if not parts:
        raise ValueError("antecedent combination needs at least one part")
    values = [check_cf(p) for p in parts]
    if kind == "and":
        return min(values)
    if kind == "or":
        return max(values)
    raise ValueError(f"unknown antecedent kind {kind!r}")
