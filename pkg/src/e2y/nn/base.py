"""Parameter bookkeeping shared by all differentiable blocks."""

from __future__ import annotations

import numpy as np


class Block:
    """A differentiable tensor function with named trainable parameters.

    forward caches whatever backward needs; backward accumulates into
    the parameter gradients and returns the input gradient. Parameter
    arrays are updated in place by the optimizer, so the dicts returned
    by params()/grads() stay live across steps.
    """

    def __init__(self):
        self._params: dict[str, np.ndarray] = {}
        self._grads: dict[str, np.ndarray] = {}
        self._children: dict[str, Block] = {}

    def add_param(self, name: str, value: np.ndarray) -> np.ndarray:
        value = np.asarray(value, dtype=np.float64)
        self._params[name] = value
        self._grads[name] = np.zeros_like(value)
        return value

    def add_child(self, name: str, block: "Block") -> "Block":
        self._children[name] = block
        return block

    def params(self) -> dict[str, np.ndarray]:
        out = dict(self._params)
        for cname, child in self._children.items():
            for key, val in child.params().items():
                out[f"{cname}/{key}"] = val
        return out

    def grads(self) -> dict[str, np.ndarray]:
        out = dict(self._grads)
        for cname, child in self._children.items():
            for key, val in child.grads().items():
                out[f"{cname}/{key}"] = val
        return out

    def zero_grads(self) -> None:
        for g in self._grads.values():
            g.fill(0.0)
        for child in self._children.values():
            child.zero_grads()

    def load_params(self, values: dict[str, np.ndarray]) -> None:
        """Copy values into the existing parameter arrays, in place."""
        own = self.params()
        missing = set(own) - set(values)
        extra = set(values) - set(own)
        if missing or extra:
            raise KeyError(f"parameter names do not match (missing={sorted(missing)}, extra={sorted(extra)})")
        for name, val in values.items():
            np.copyto(own[name], np.asarray(val, dtype=np.float64))

    def num_params(self) -> int:
        return sum(int(p.size) for p in self.params().values())

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError
