"""Control words: finite concatenations of bang, free and singular arcs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError


class ArcKind(str, Enum):
    """Arc alphabet: X (u=-1), Y (u=+1), F0 (u=0), Z (singular feedback)."""

    X = "X"
    Y = "Y"
    Z = "Z"
    F0 = "F0"


#: constant control value per arc kind; Z uses state feedback instead
ARC_CONTROL = {ArcKind.X: -1.0, ArcKind.Y: 1.0, ArcKind.F0: 0.0}


@dataclass(frozen=True)
class Arc:
    kind: ArcKind
    duration: float

    def __post_init__(self):
        if not self.duration > 0.0:
            raise ConfigError(f"arc duration must be > 0, got {self.duration}")


@dataclass(frozen=True)
class ControlWord:
    """Ordered arcs, listed in order of execution."""

    arcs: tuple[Arc, ...]

    @property
    def total_time(self) -> float:
        return sum(a.duration for a in self.arcs)

    @property
    def kinds(self) -> tuple[ArcKind, ...]:
        return tuple(a.kind for a in self.arcs)

    def label(self) -> str:
        """Compact label such as ``Y*Z*X`` (execution order, left to right)."""
        if not self.arcs:
            return "-"
        return "*".join(a.kind.value for a in self.arcs)

    def to_json(self) -> str:
        return json.dumps(
            {
                "arcs": [{"kind": a.kind.value, "duration": a.duration} for a in self.arcs],
                "total_time": self.total_time,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ControlWord":
        data = json.loads(text)
        return cls.make([(a["kind"], a["duration"]) for a in data["arcs"]])

    @classmethod
    def make(cls, pairs) -> "ControlWord":
        """Build a word from (kind, duration) pairs, dropping zero durations."""
        arcs = []
        for kind, dur in pairs:
            dur = float(dur)
            if dur == 0.0:
                continue
            arcs.append(Arc(ArcKind(kind), dur))
        return cls(tuple(arcs))

    @classmethod
    def parse(cls, text: str) -> "ControlWord":
        """Parse a CLI word spec such as ``Y:2.0,X:1.5`` or ``Z:1.0``."""
        text = text.strip()
        if not text:
            return cls(())
        pairs = []
        for chunk in text.split(","):
            try:
                kind, dur = chunk.split(":")
                pairs.append((ArcKind(kind.strip()), float(dur)))
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"cannot parse word segment {chunk!r}") from exc
        return cls.make(pairs)


EMPTY_WORD = ControlWord(())
