"""Observed convergence order from error sweeps."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np


def observed_order(h: Sequence[float], err: Sequence[float], floor: float = 1e-14) -> Optional[float]:
    """Least-squares slope of ``log err`` against ``log h``.

    Points with ``err <= floor`` carry no order information and are dropped;
    None if fewer than two remain.
    """
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = err > floor
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(h[keep]), np.log(err[keep]), 1)[0])


def pairwise_orders(h: Sequence[float], err: Sequence[float]) -> list[float]:
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    return list(np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:]))


def is_monotone_decreasing(err: Sequence[float]) -> bool:
    err = np.asarray(err, dtype=float)
    return bool(np.all(np.diff(err) < 0))
