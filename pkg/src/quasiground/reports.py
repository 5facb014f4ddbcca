"""Pass/fail bookkeeping for sampled property checks."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class PropertyEntry:
    name: str
    domain: str
    worst_violation: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "domain": self.domain,
            "worst_violation": float(self.worst_violation),
            "passed": bool(self.passed),
            "detail": self.detail,
        }


@dataclass
class PropertyReport:
    """Ordered list of checked properties; ``passed`` is the conjunction."""

    title: str = ""
    entries: list[PropertyEntry] = field(default_factory=list)

    def add(self, name, domain, worst_violation, passed, detail=""):
        self.entries.append(
            PropertyEntry(name, domain, float(worst_violation), bool(passed), detail)
        )
        return self

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name: str) -> PropertyEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def failures(self) -> list[PropertyEntry]:
        return [e for e in self.entries if not e.passed]

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "entries": [e.to_dict() for e in self.entries],
        }

    def format_table(self) -> str:
        width = max([len(e.name) for e in self.entries] + [8])
        lines = [f"== {self.title} ==" if self.title else ""]
        for e in self.entries:
            flag = "PASS" if e.passed else "FAIL"
            lines.append(
                f"  [{flag}] {e.name:<{width}}  worst={e.worst_violation:.3e}  {e.domain}"
                + (f"  ({e.detail})" if e.detail else "")
            )
        lines.append(f"  overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(line for line in lines if line)
