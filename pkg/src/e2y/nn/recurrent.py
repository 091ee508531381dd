"""Masked GRU and LSTM layers with full backpropagation through time.

Masked steps copy the previous state forward and emit zeros, so content
at masked positions can never reach an unmasked output.
"""

from __future__ import annotations

import numpy as np

from .base import Block
from .init import fan_in_uniform, orthogonal


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class GRULayer(Block):
    """Single gated-recurrent-unit layer: [batch, time, in] -> [batch, time, hidden].

    Gates follow the convention
        z_t = sigmoid(x W_z + h U_z + b_z)        (update)
        r_t = sigmoid(x W_r + h U_r + b_r)        (reset)
        c_t = tanh(x W_c + (r_t * h) U_c + b_c)   (candidate)
        h_t = (1 - z_t) * h_{t-1} + z_t * c_t
    """

    GATES = ("z", "r", "c")

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        super().__init__()
        self.in_dim, self.hidden = in_dim, hidden
        for g in self.GATES:
            self.add_param(f"W{g}", fan_in_uniform(rng, (in_dim, hidden), in_dim))
            self.add_param(f"U{g}", orthogonal(rng, hidden))
            self.add_param(f"b{g}", np.zeros(hidden))

    def forward(self, x: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        p = self._params
        batch, time, _ = x.shape
        if mask is None:
            mask = np.ones((batch, time))
        h = np.zeros((batch, self.hidden))
        out = np.empty((batch, time, self.hidden))
        cache = []
        for t in range(time):
            xt, mt = x[:, t, :], mask[:, t, None]
            z = _sigmoid(xt @ p["Wz"] + h @ p["Uz"] + p["bz"])
            r = _sigmoid(xt @ p["Wr"] + h @ p["Ur"] + p["br"])
            rh = r * h
            c = np.tanh(xt @ p["Wc"] + rh @ p["Uc"] + p["bc"])
            h_new = (1.0 - z) * h + z * c
            cache.append((xt, h, z, r, c, rh, mt))
            out[:, t, :] = mt * h_new
            h = mt * h_new + (1.0 - mt) * h
        self._cache, self._x_shape = cache, x.shape
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        p, g = self._params, self._grads
        dx = np.zeros(self._x_shape)
        dh = np.zeros((self._x_shape[0], self.hidden))
        for t in range(self._x_shape[1] - 1, -1, -1):
            xt, h_prev, z, r, c, rh, mt = self._cache[t]
            dh_new = (dout[:, t, :] + dh) * mt
            dh_prev = dh * (1.0 - mt)

            dz = dh_new * (c - h_prev)
            dc = dh_new * z
            dh_prev = dh_prev + dh_new * (1.0 - z)

            dc_pre = dc * (1.0 - c * c)
            g["Wc"] += xt.T @ dc_pre
            g["Uc"] += rh.T @ dc_pre
            g["bc"] += dc_pre.sum(axis=0)
            drh = dc_pre @ p["Uc"].T
            dr = drh * h_prev
            dh_prev = dh_prev + drh * r
            dxt = dc_pre @ p["Wc"].T

            dz_pre = dz * z * (1.0 - z)
            g["Wz"] += xt.T @ dz_pre
            g["Uz"] += h_prev.T @ dz_pre
            g["bz"] += dz_pre.sum(axis=0)
            dh_prev = dh_prev + dz_pre @ p["Uz"].T
            dxt += dz_pre @ p["Wz"].T

            dr_pre = dr * r * (1.0 - r)
            g["Wr"] += xt.T @ dr_pre
            g["Ur"] += h_prev.T @ dr_pre
            g["br"] += dr_pre.sum(axis=0)
            dh_prev = dh_prev + dr_pre @ p["Ur"].T
            dxt += dr_pre @ p["Wr"].T

            dx[:, t, :] = dxt
            dh = dh_prev
        return dx


class LSTMLayer(Block):
    """Single LSTM layer with input/forget/output gates and cell state."""

    GATES = ("i", "f", "o", "g")

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        super().__init__()
        self.in_dim, self.hidden = in_dim, hidden
        for gate in self.GATES:
            self.add_param(f"W{gate}", fan_in_uniform(rng, (in_dim, hidden), in_dim))
            self.add_param(f"U{gate}", orthogonal(rng, hidden))
            self.add_param(f"b{gate}", np.zeros(hidden))

    def forward(self, x: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        p = self._params
        batch, time, _ = x.shape
        if mask is None:
            mask = np.ones((batch, time))
        h = np.zeros((batch, self.hidden))
        cell = np.zeros((batch, self.hidden))
        out = np.empty((batch, time, self.hidden))
        cache = []
        for t in range(time):
            xt, mt = x[:, t, :], mask[:, t, None]
            i = _sigmoid(xt @ p["Wi"] + h @ p["Ui"] + p["bi"])
            f = _sigmoid(xt @ p["Wf"] + h @ p["Uf"] + p["bf"])
            o = _sigmoid(xt @ p["Wo"] + h @ p["Uo"] + p["bo"])
            gc = np.tanh(xt @ p["Wg"] + h @ p["Ug"] + p["bg"])
            c_new = f * cell + i * gc
            tc = np.tanh(c_new)
            h_new = o * tc
            cache.append((xt, h, cell, i, f, o, gc, tc, mt))
            out[:, t, :] = mt * h_new
            h = mt * h_new + (1.0 - mt) * h
            cell = mt * c_new + (1.0 - mt) * cell
        self._cache, self._x_shape = cache, x.shape
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        p, g = self._params, self._grads
        dx = np.zeros(self._x_shape)
        dh = np.zeros((self._x_shape[0], self.hidden))
        dc = np.zeros((self._x_shape[0], self.hidden))
        for t in range(self._x_shape[1] - 1, -1, -1):
            xt, h_prev, c_prev, i, f, o, gc, tc, mt = self._cache[t]
            dh_new = (dout[:, t, :] + dh) * mt
            dh_prev = dh * (1.0 - mt)
            dc_new = dc * mt
            dc_prev = dc * (1.0 - mt)

            do = dh_new * tc
            dc_new = dc_new + dh_new * o * (1.0 - tc * tc)
            di = dc_new * gc
            dgc = dc_new * i
            df = dc_new * c_prev
            dc_prev = dc_prev + dc_new * f

            dxt = np.zeros((self._x_shape[0], self.in_dim))
            for gate, d_post, pre in (
                ("i", di, i),
                ("f", df, f),
                ("o", do, o),
            ):
                d_pre = d_post * pre * (1.0 - pre)
                g[f"W{gate}"] += xt.T @ d_pre
                g[f"U{gate}"] += h_prev.T @ d_pre
                g[f"b{gate}"] += d_pre.sum(axis=0)
                dh_prev = dh_prev + d_pre @ p[f"U{gate}"].T
                dxt += d_pre @ p[f"W{gate}"].T
            dg_pre = dgc * (1.0 - gc * gc)
            g["Wg"] += xt.T @ dg_pre
            g["Ug"] += h_prev.T @ dg_pre
            g["bg"] += dg_pre.sum(axis=0)
            dh_prev = dh_prev + dg_pre @ p["Ug"].T
            dxt += dg_pre @ p["Wg"].T

            dx[:, t, :] = dxt
            dh, dc = dh_prev, dc_prev
        return dx
