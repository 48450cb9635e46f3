"""Observation and batch containers shared across the stack."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Observation:
    """One control tick's sensor readout.

    images: view id -> [h, w, 3] uint8; proprio: raw joint positions
    (radians) and gripper openness values, matching the action layout.
    """
    images: dict[str, np.ndarray]
    proprio: np.ndarray

    def validate(self) -> "Observation":
        for vid, img in self.images.items():
            if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
                raise ValueError(f"view '{vid}' must be [h,w,3] uint8")
        return self


@dataclass
class ObsBatch:
    """Stacked, normalization-applied observations for the training/eval paths.

    images: [B, ncam, h, w, 3] uint8 in policy camera order;
    proprio: [B, A] float32 already normalized to [-1, 1].
    """
    images: np.ndarray
    proprio: np.ndarray
