"""Minimal float64 neural-network blocks with hand-written backprop."""

from .base import Block
from .init import fan_in_uniform, orthogonal
from .layers import (
    Conv1d,
    Conv2d,
    Dense,
    FrameNorm,
    GlobalAvgPool2d,
    MaxPool1d,
    MaxPool2d,
)
from .recurrent import GRULayer, LSTMLayer

__all__ = [
    "Block",
    "Conv1d",
    "Conv2d",
    "Dense",
    "FrameNorm",
    "GRULayer",
    "GlobalAvgPool2d",
    "LSTMLayer",
    "MaxPool1d",
    "MaxPool2d",
    "fan_in_uniform",
    "orthogonal",
]
