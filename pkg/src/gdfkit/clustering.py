"""Mode clustering: label each sample point by its ascent destination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import modes
from .core import GdfModel
from .modes import AscentConfig, ModeSet

__all__ = ["ClusterAssignment", "cluster"]


@dataclass(frozen=True)
class ClusterAssignment:
    """Labels aligned with the sample plus the mode set they refer to.

    ``labels[i]`` is the retained-mode index point ``i`` ascended to, or -1
    for the indices listed in ``unassigned`` (failed or rejected
    trajectories).
    """

    labels: np.ndarray
    modes: ModeSet
    unassigned: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=int))
        object.__setattr__(self, "unassigned", np.asarray(self.unassigned, dtype=int))


def cluster(model: GdfModel, cfg: AscentConfig | None = None) -> ClusterAssignment:
    """Partition the sample by mean-shift destination.

    Every point whose trajectory converged into a retained mode gets that
    mode's index; the rest are reported in ``unassigned``.  The mode set's
    basin counts equal the label histogram by construction.  The procedure
    is deterministic: rerunning on the same model yields identical labels.
    """
    cfg = cfg or AscentConfig()
    modeset, labels, _ = modes._collect(model, model.sample.points, cfg)
    return ClusterAssignment(
        labels=labels,
        modes=modeset,
        unassigned=np.flatnonzero(labels < 0),
    )
