"""Structured pass/fail records shared by every verifier."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any


class PreconditionError(ValueError):
    """Input outside the hypotheses of the statement being checked."""


def half(x: Fraction | int | None) -> Any:
    """JSON form of a half-integer: {num, den} pairs, never floats."""
    if x is None:
        return None
    if isinstance(x, str):
        return x
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def jsonable(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return half(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "to_json"):
        return obj.to_json()
    return obj


@dataclass
class VerificationReport:
    """Outcome of one check.

    ``margin`` is the worst observed valuation minus the required one (for
    O-bound checks) and ``witness`` names the offending coefficient on failure.
    """

    claim: str
    passed: bool
    params: dict = field(default_factory=dict)
    required: Fraction | int | None = None
    margin: Fraction | int | None = None
    witness: dict | None = None
    notes: list[str] = field(default_factory=list)
    children: list["VerificationReport"] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {
            "claim": self.claim,
            "pass": self.passed,
            "params": jsonable(self.params),
        }
        if self.required is not None:
            out["required"] = half(self.required)
        if self.margin is not None:
            out["margin"] = half(self.margin)
        if self.witness is not None:
            out["witness"] = jsonable(self.witness)
        if self.notes:
            out["notes"] = list(self.notes)
        if self.children:
            out["children"] = [c.to_json() for c in self.children]
        return out

    @classmethod
    def combine(cls, claim: str, children: list["VerificationReport"], **params) -> "VerificationReport":
        margins = [c.margin for c in children if c.margin is not None]
        return cls(
            claim,
            all(c.passed for c in children),
            params=params,
            margin=min(margins) if margins else None,
            witness=next((c.witness for c in children if not c.passed), None),
            children=children,
        )

    def __bool__(self) -> bool:
        return self.passed
