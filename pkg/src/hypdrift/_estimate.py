"""Point estimate with uncertainty and reproducibility metadata."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n: int = 0
    seed: int | None = None
    method: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.value - 1.96 * self.stderr, self.value + 1.96 * self.stderr)

    def to_json(self) -> dict:
        lo, hi = self.ci95
        out = {
            "value": self.value,
            "stderr": self.stderr,
            "ci95": [lo, hi],
            "n": self.n,
            "method": self.method,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        if self.extra:
            out["extra"] = {k: self.extra[k] for k in sorted(self.extra)}
        return out
