"""Training hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class TrainConfig:
    seq_len: int = 128
    seq_step: int = 4
    batch_size: int = 64
    epochs: int = 30
    learning_rate: float = 1e-3
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    hidden_units: tuple[int, int, int] = (64, 32, 16)
    attention_heads: int = 8
    attention_key_dim: int = 128
    dropout_rate: float = 0.3
    dense_units: tuple[int, int] = (128, 64)
    noise_std_fraction: float = 0.05
    seed: int = 0

    def __post_init__(self):
        h1, h2, h3 = self.hidden_units
        if not (h1 > h2 > h3 > 0):
            raise ValueError("hidden_units must be strictly decreasing")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.focal_gamma < 0:
            raise ValueError("focal_gamma must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if min(self.seq_len, self.seq_step, self.batch_size, self.epochs) < 1:
            raise ValueError("seq_len, seq_step, batch_size, epochs must be >= 1")
        if min(self.attention_heads, self.attention_key_dim) < 1:
            raise ValueError("attention dimensions must be >= 1")
