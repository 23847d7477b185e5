"""QPSK alphabet with a two-level set partition.

The low level splits the alphabet into the antipodal pairs {A, -A} and
{jA, -jA}; the high level picks one point out of each pair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Level(enum.Enum):
    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True)
class LevelSubset:
    """Points selected by a partition path.

    ``bits`` holds the conditioning bits in path order: ``(v_low,)`` for a
    low-level subset and ``(v_low, v_high)`` for a high-level one.
    """

    level: Level
    bits: tuple[int, ...]
    members: tuple[int, ...]


@dataclass(frozen=True)
class LabeledConstellation:
    """Complex signal points with ``[v_high, v_low]`` labels.

    Only the QPSK construction is provided (:func:`qpsk`), but nothing here
    assumes four points, so larger partitions can be added later.
    """

    points: np.ndarray
    labels: tuple[tuple[int, int], ...]
    amplitude: float
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if len(self.labels) != len(pts):
            raise ValueError("one label per point is required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be distinct")
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    @property
    def size(self) -> int:
        return len(self.points)

    def subset(self, level: Level, bits) -> LevelSubset:
        """Return the subset reached by the partition path ``bits``.

        For ``Level.LOW`` pass ``v_low`` (an int or a 1-tuple); for
        ``Level.HIGH`` pass ``(v_low, v_high)``.
        """
        bits = (bits,) if np.isscalar(bits) else tuple(int(b) for b in bits)
        if level is Level.LOW:
            if len(bits) != 1:
                raise ValueError("low-level subsets are conditioned on v_low only")
            members = tuple(i for i, (_, vl) in enumerate(self.labels) if vl == bits[0])
        else:
            if len(bits) != 2:
                raise ValueError("high-level subsets need (v_low, v_high)")
            vl, vh = bits
            members = tuple(
                i for i, lab in enumerate(self.labels) if lab == (vh, vl)
            )
        if not members:
            raise ValueError(f"empty subset for path {bits}")
        return LevelSubset(level, bits, members)

    def subset_points(self, subset: LevelSubset) -> np.ndarray:
        return self.points[list(subset.members)]

    def low_subsets(self) -> tuple[LevelSubset, LevelSubset]:
        return self.subset(Level.LOW, 0), self.subset(Level.LOW, 1)

    def high_subsets(self, v_low: int) -> tuple[LevelSubset, LevelSubset]:
        return self.subset(Level.HIGH, (v_low, 0)), self.subset(Level.HIGH, (v_low, 1))

    def rotated(self, angle: float) -> LabeledConstellation:
        """Same labels, every point rotated by ``angle`` radians."""
        return LabeledConstellation(self.points * np.exp(1j * angle), self.labels, self.amplitude)

    def mean_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))


def qpsk(amplitude: float = 1.0) -> LabeledConstellation:
    """QPSK with q1=A, q2=jA, q3=-A, q4=-jA and labels [v_high, v_low].

    v_low=0 selects {q1, q3}, v_low=1 selects {q2, q4}; v_high then picks
    the first (0) or second (1) point of the pair.
    """
    if not np.isfinite(amplitude) or amplitude <= 0:
        raise ValueError(f"amplitude must be positive, got {amplitude}")
    a = float(amplitude)
    points = np.array([a, 1j * a, -a, -1j * a])
    labels = ((0, 0), (0, 1), (1, 0), (1, 1))
    return LabeledConstellation(points, labels, a)


def map_bits(c: LabeledConstellation, v) -> complex:
    """Return the point labelled ``v = [v_high, v_low]``."""
    key = (int(v[0]), int(v[1]))
    try:
        return complex(c.points[c._index[key]])
    except KeyError:
        raise ValueError(f"no point carries label {key}") from None


def map_bits_array(c: LabeledConstellation, v_high, v_low) -> np.ndarray:
    """Vectorized :func:`map_bits` over equal-length bit arrays."""
    lut = np.empty((2, 2), dtype=complex)
    for (vh, vl), i in c._index.items():
        lut[vh, vl] = c.points[i]
    return lut[np.asarray(v_high, dtype=np.intp), np.asarray(v_low, dtype=np.intp)]
