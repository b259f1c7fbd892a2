"""Cyclical learning-rate schedule and checkpoint selection for checkpoint ensembles.

Exported as utilities for an external trainer; nothing in this package runs
training itself.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CyclicalLrConfig:
    total_epochs: int = 1200
    cycle_length: int = 400
    alpha_r: float = 0.1  # restart LR at the start of each cycle
    alpha_0: float = 0.01
    gamma: float = 0.8
    decay_exponent: float = 0.9
    checkpoints_per_cycle_tail: int = 10
    inference_subset_size: int = 5

    def __post_init__(self):
        if self.total_epochs % self.cycle_length != 0:
            raise ValueError(
                f"total_epochs {self.total_epochs} not divisible by cycle_length {self.cycle_length}"
            )
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.decay_exponent <= 0:
            raise ValueError(f"decay_exponent must be positive, got {self.decay_exponent}")
        if self.checkpoints_per_cycle_tail < 1 or self.checkpoints_per_cycle_tail > self.cycle_length:
            raise ValueError("checkpoints_per_cycle_tail out of range")

    @property
    def n_cycles(self) -> int:
        return self.total_epochs // self.cycle_length


def lr_schedule(t: int, cfg: CyclicalLrConfig = CyclicalLrConfig()) -> float:
    """Learning rate at epoch t.

    Each cycle restarts at alpha_r, then follows a polynomial decay of
    alpha_0 that flattens into a plateau once t_c reaches gamma * cycle_length.
    """
    if not 0 <= t < cfg.total_epochs:
        raise ValueError(f"epoch {t} outside [0, {cfg.total_epochs})")
    t_c = t % cfg.cycle_length
    if t_c == 0:
        return cfg.alpha_r
    frac = min(t_c, cfg.gamma * cfg.cycle_length) / cfg.cycle_length
    return cfg.alpha_0 * (1.0 - frac) ** cfg.decay_exponent


def checkpoint_epochs(cfg: CyclicalLrConfig = CyclicalLrConfig()) -> list[int]:
    """Epochs at which checkpoints are saved: the tail of every cycle."""
    out = []
    for cycle in range(1, cfg.n_cycles + 1):
        end = cycle * cfg.cycle_length
        out.extend(range(end - cfg.checkpoints_per_cycle_tail, end))
    return out


def inference_checkpoints(cfg: CyclicalLrConfig = CyclicalLrConfig()) -> list[int]:
    """The checkpoint subset ensembled at inference: the last inference_subset_size epochs saved."""
    all_epochs = checkpoint_epochs(cfg)
    k = cfg.inference_subset_size
    if k > len(all_epochs):
        raise ValueError(f"subset size {k} exceeds {len(all_epochs)} saved checkpoints")
    return all_epochs[-k:]
