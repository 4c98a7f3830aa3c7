"""Completely randomized designs: sampling, enumeration, counting.

A design fixes the group sizes (N_1, ..., N_J); an assignment is any length-N
vector of treatment labels with exactly N_j copies of label j. The assignment
mechanism puts equal probability 1 / (N! / prod N_j!) on every such vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapExceeded

DEFAULT_ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class Design:
    """Group sizes of a completely randomized experiment."""

    group_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.group_sizes)
        object.__setattr__(self, "group_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError("a design needs at least 2 treatment groups")
        if any(n < 1 for n in sizes):
            raise ValueError("every group size must be a positive integer")

    @property
    def n_units(self) -> int:
        return sum(self.group_sizes)

    @property
    def n_treatments(self) -> int:
        return len(self.group_sizes)

    @property
    def proportions(self) -> np.ndarray:
        sizes = np.asarray(self.group_sizes, dtype=float)
        return sizes / sizes.sum()

    def base_labels(self) -> np.ndarray:
        """The sorted label vector (1 repeated N_1 times, ..., J repeated N_J times)."""
        return np.repeat(np.arange(1, self.n_treatments + 1), self.group_sizes)


@dataclass(frozen=True)
class Assignment:
    """A realized treatment-label vector consistent with a design."""

    labels: tuple[int, ...]
    design: Design

    def __post_init__(self):
        labels = tuple(int(w) for w in self.labels)
        object.__setattr__(self, "labels", labels)
        counts = np.bincount(labels, minlength=self.design.n_treatments + 1)[1:]
        if tuple(counts) != self.design.group_sizes:
            raise ValueError("label counts do not match the design's group sizes")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)


def assignment_count(design: Design) -> int:
    """Exact number of distinct assignments, N! / prod(N_j!).

    Evaluated with arbitrary-precision integers, so it never overflows.
    """
    count = math.factorial(design.n_units)
    for n in design.group_sizes:
        count //= math.factorial(n)
    return count


def sample_assignment(design: Design, rng: np.random.Generator) -> Assignment:
    """Draw one assignment uniformly over all label vectors of the design."""
    labels = rng.permutation(design.base_labels())
    return Assignment(labels=tuple(int(w) for w in labels), design=design)


def enumerate_assignments(
    design: Design, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[Assignment]:
    """Yield every distinct assignment exactly once, lexicographically.

    Raises CapExceeded when the assignment count is above ``cap``, signalling
    callers to fall back to Monte Carlo sampling.
    """
    for labels in _iter_label_vectors(design, cap):
        yield Assignment(labels=tuple(int(w) for w in labels), design=design)


def label_matrix_chunks(
    design: Design, cap: int = DEFAULT_ENUMERATION_CAP, chunk_rows: int = 4096
) -> Iterator[np.ndarray]:
    """Enumerated assignments as stacked (rows, N) label matrices.

    Same order and cap semantics as :func:`enumerate_assignments`; used by the
    exact randomization-test path to avoid per-assignment object overhead.
    """
    buffer: list[np.ndarray] = []
    for labels in _iter_label_vectors(design, cap):
        buffer.append(labels.copy())
        if len(buffer) == chunk_rows:
            yield np.stack(buffer)
            buffer = []
    if buffer:
        yield np.stack(buffer)


def _iter_label_vectors(design: Design, cap: int) -> Iterator[np.ndarray]:
    total = assignment_count(design)
    if total > cap:
        raise CapExceeded(
            f"design {design.group_sizes} has {total} assignments, above the cap of {cap}"
        )
    # Classic next-permutation walk over the multiset of labels, ascending start.
    a = design.base_labels()
    n = a.size
    while True:
        yield a
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1 :] = a[i + 1 :][::-1].copy()
