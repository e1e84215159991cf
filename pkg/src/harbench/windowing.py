"""Sliding-window segmentation and per-window labeling.

A configuration is (window size W, overlap factor o); consecutive windows
start step = max(1, round(W*(1-o))) samples apart, so W - step samples are
reused between neighbors. Windows mixing activities are labeled with the
modal activity and dropped when its share falls below the purity threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import PROTOCOL_ACTIVITIES, TRANSIENT_ACTIVITY

DEFAULT_PURITY = 0.8


class WindowingError(Exception):
    pass


@dataclass(frozen=True)
class WindowConfig:
    window_size: int
    overlap: float

    def __post_init__(self):
        if self.window_size < 2:
            raise WindowingError(f"window_size must be >= 2, got {self.window_size}")
        if not 0.0 <= self.overlap < 1.0:
            raise WindowingError(f"overlap must be in [0, 1), got {self.overlap}")

    @property
    def step(self) -> int:
        # round half up keeps W=100, o=0.1 at step 90 and never yields 0
        return max(1, int(math.floor(self.window_size * (1.0 - self.overlap) + 0.5)))


@dataclass(frozen=True)
class WindowCandidate:
    """A raw window slice, not yet labeled."""
    stream: object
    start: int
    size: int

    @property
    def activity_ids(self):
        return self.stream.activity_ids[self.start:self.start + self.size]

    @property
    def channels(self):
        """(W, 27) feature-channel slice."""
        return self.stream.feature_channels[self.start:self.start + self.size]


@dataclass(frozen=True)
class SensorWindow:
    """A labeled window kept for feature extraction."""
    stream: object
    start: int
    size: int
    label: int
    purity: float

    @property
    def user_id(self):
        return self.stream.user_id

    @property
    def channels(self):
        return self.stream.feature_channels[self.start:self.start + self.size]


def segment(stream, config):
    """All fully-contained windows at starts 0, step, 2*step, ...

    Returns [] when the stream is shorter than one window.
    """
    n = len(stream)
    w = config.window_size
    if n < w:
        return []
    count = (n - w) // config.step + 1
    return [WindowCandidate(stream, i * config.step, w) for i in range(count)]


def label_window(candidate, purity_threshold=DEFAULT_PURITY,
                 valid_labels=PROTOCOL_ACTIVITIES):
    """Assign the modal activity label, or None when the window is discarded.

    Ties are broken toward the label occurring earlier in the window. Kept
    only when the modal share reaches the purity threshold and the label is
    a valid (non-transient) activity.
    """
    ids = candidate.activity_ids
    labels, first_pos, counts = np.unique(ids, return_index=True,
                                          return_counts=True)
    order = np.lexsort((first_pos, -counts))  # max count, then earliest
    modal = int(labels[order[0]])
    purity = counts[order[0]] / len(ids)
    if purity < purity_threshold:
        return None
    if modal == TRANSIENT_ACTIVITY or modal not in valid_labels:
        return None
    return SensorWindow(candidate.stream, candidate.start, candidate.size,
                        label=modal, purity=float(purity))


def labeled_windows(stream, config, purity_threshold=DEFAULT_PURITY,
                    valid_labels=PROTOCOL_ACTIVITIES):
    """Segment then label, dropping discarded windows."""
    out = []
    for cand in segment(stream, config):
        win = label_window(cand, purity_threshold, valid_labels)
        if win is not None:
            out.append(win)
    return out


def classification_count(stream, config, purity_threshold=DEFAULT_PURITY,
                         valid_labels=PROTOCOL_ACTIVITIES) -> int:
    """Number of kept windows, i.e. one classification per window."""
    return len(labeled_windows(stream, config, purity_threshold, valid_labels))
