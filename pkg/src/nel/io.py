"""Serialization helpers: exact node labels, full-precision CSV, manifests."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path


def fraction_str(x: Fraction) -> str:
    """Exact "num/den" label (the denominator is always written)."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_fraction(text: str) -> Fraction:
    num, _, den = text.strip().partition("/")
    return Fraction(int(num), int(den)) if den else Fraction(int(num))


def fmt17(value: float) -> str:
    """Float with 17 significant digits, enough to round-trip exactly."""
    return format(float(value), ".17g")


def write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            cells = [fmt17(c) if isinstance(c, float) else str(c) for c in row]
            handle.write(",".join(cells) + "\n")


def write_json(path, payload: dict) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=1, sort_keys=True)
        handle.write("\n")


def write_gnuplot(path, comment: str, pairs) -> None:
    """Two-column data file with a leading comment line."""
    with open(path, "w", newline="\n") as handle:
        handle.write(f"# {comment}\n")
        for a, b in pairs:
            handle.write(f"{fmt17(float(a))} {fmt17(float(b))}\n")


@dataclass
class RunManifest:
    """Provenance record written next to every set of output files."""

    command: str
    config: dict
    outputs: list[str] = field(default_factory=list)
    seed: int | None = None
    artifact_version: str = "0.1.0"
    wall_clock_s: float = 0.0

    def write(self, path) -> None:
        write_json(
            path,
            {
                "command": self.command,
                "config": self.config,
                "outputs": sorted(self.outputs),
                "seed": self.seed,
                "artifact_version": self.artifact_version,
                "wall_clock_s": self.wall_clock_s,
            },
        )


class Stopwatch:
    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._start
        return False
