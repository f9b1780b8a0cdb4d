"""Synthetic wearable cohort study toolkit.

Python surface over the C++ core: autodiff tensors, the sequence model's
training-side operations, synthetic cohort generation and ranking metrics.
"""

from sslchrono._core import (
    CohortParams,
    Mode,
    Rng,
    SslchronoError,
    Tape,
    Tensor,
    add,
    auc,
    cohort_rows,
    cosine_lr,
    cross_entropy_loss,
    layer_norm,
    matmul,
    mse_loss,
    mul,
    relu,
    softmax,
    sum,
)

__all__ = [
    "CohortParams",
    "Mode",
    "Rng",
    "SslchronoError",
    "Tape",
    "Tensor",
    "add",
    "auc",
    "cohort_rows",
    "cosine_lr",
    "cross_entropy_loss",
    "layer_norm",
    "matmul",
    "mse_loss",
    "mul",
    "relu",
    "softmax",
    "sum",
]

__version__ = "0.1.0"
