"""Three-valued semi-decision results with provenance.

Every predicate in the kernel that cannot decide exactly returns a Verdict
carrying the answer kind, an exact|sampled tag, and an optional witness.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class Verdict:
    kind: str
    provenance: str  # 'exact' or 'sampled'
    witness: object = None
    note: str = ""

    def __post_init__(self):
        if self.provenance not in ("exact", "sampled"):
            raise ValueError(f"bad provenance {self.provenance!r}")

    def is_(self, kind: str) -> bool:
        return self.kind == kind

    def to_json(self):
        out = {"kind": self.kind, "provenance": self.provenance}
        if self.witness is not None:
            out["witness"] = jsonable(self.witness)
        if self.note:
            out["note"] = self.note
        return out


def jsonable(value):
    """Best-effort conversion of kernel values to JSON-encodable data."""
    if isinstance(value, Verdict):
        return value.to_json()
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)
