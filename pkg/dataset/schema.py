"""
Column layout shared by datasets and models
"""

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Any


class FeatureKind(str, Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


class Split(IntEnum):
    TRAIN = 0
    VALID = 1
    TEST = 2


@dataclass(frozen=True)
class FeatureColumn:
    """One source feature and the encoded columns [start, stop) it occupies"""

    name: str
    kind: FeatureKind
    start: int
    stop: int
    levels: tuple[str, ...] = ()

    @property
    def width(self) -> int:
        return self.stop - self.start

    @property
    def n_classes(self) -> int:
        return len(self.levels) if self.kind == FeatureKind.CATEGORICAL else 0

    @property
    def encoded_names(self) -> list[str]:
        if self.kind == FeatureKind.CONTINUOUS:
            return [self.name]
        return [f"{self.name}={level}" for level in self.levels]

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "start": self.start,
            "stop": self.stop,
            "levels": list(self.levels),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FeatureColumn":
        return cls(
            name=str(data["name"]),
            kind=FeatureKind(data["kind"]),
            start=int(data["start"]),
            stop=int(data["stop"]),
            levels=tuple(str(v) for v in data.get("levels") or []),
        )


def continuous_features(names: list[str]) -> list[FeatureColumn]:
    """Layout for an all-continuous matrix"""
    return [FeatureColumn(name, FeatureKind.CONTINUOUS, j, j + 1) for j, name in enumerate(names)]
