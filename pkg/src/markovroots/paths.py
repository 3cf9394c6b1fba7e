"""Sample paths and their JSON Lines representation.

One line per path::

    {"path_id": 0, "z_c": [1.53], "z_d": [1], "y0": 2, "events": [[11, 2], [9, 3]]}

States are 1-based. ``events`` holds ``[gap, state]`` pairs in observation order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .markov import CovariatePoint

__all__ = ["SamplePath", "write_jsonl", "read_jsonl", "iter_jsonl", "DatasetError"]


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class SamplePath:
    path_id: int
    covariates: CovariatePoint
    y0: int
    events: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "events", tuple((int(t), int(y)) for t, y in self.events)
        )

    def transitions(self) -> Iterator[tuple[int, int, int]]:
        """Yield ``(from_state, to_state, gap)`` triples."""
        prev = self.y0
        for tau, y in self.events:
            yield prev, y, tau
            prev = y

    @property
    def total_time(self) -> int:
        return sum(t for t, _ in self.events)

    def to_json(self) -> dict:
        return {
            "path_id": self.path_id,
            "z_c": list(self.covariates.continuous),
            "z_d": list(self.covariates.discrete),
            "y0": self.y0,
            "events": [list(e) for e in self.events],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SamplePath":
        try:
            return cls(
                path_id=obj["path_id"],
                covariates=CovariatePoint(tuple(obj.get("z_c", ())), tuple(obj.get("z_d", ()))),
                y0=int(obj["y0"]),
                events=tuple(obj["events"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"malformed path record: {exc}") from exc


def write_jsonl(paths: Iterable[SamplePath], dest: str | Path | IO[str]) -> int:
    """Write paths one JSON object per line; returns the count written."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8") as fh:
            return write_jsonl(paths, fh)
    n = 0
    for path in paths:
        dest.write(json.dumps(path.to_json(), separators=(",", ":")))
        dest.write("\n")
        n += 1
    return n


def iter_jsonl(src: str | Path) -> Iterator[SamplePath]:
    with open(src, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{src}:{lineno}: {exc.msg}") from exc
            try:
                yield SamplePath.from_json(obj)
            except DatasetError as exc:
                raise DatasetError(f"{src}:{lineno}: {exc}") from exc


def read_jsonl(src: str | Path) -> list[SamplePath]:
    return list(iter_jsonl(src))
