"""
Transition surrogate: one tanh hidden layer mapping
(action sign, T_in at slot start, T_out at slot start, T_out at slot end)
to (T_in at slot end, HVAC on-fraction).

Training runs through the torch module; the solver evaluates the same weights
with plain numpy so a whole grid layer costs one matrix product.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from pcm_hems.errors import LoadError
from pcm_hems.thermal.hvac import Action

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
INPUT_NAMES = ("action", "t_in_prev", "t_out_prev", "t_out")
OUTPUT_NAMES = ("t_in", "on_fraction")


class TransitionNet(nn.Module):
    def __init__(self, input_dim: int = len(INPUT_NAMES), hidden: int = 16,
                 output_dim: int = len(OUTPUT_NAMES)):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(input_dim, hidden),
            nn.Tanh(),
            nn.Linear(hidden, output_dim),
        )

    def forward(self, x):
        return self.net(x)


@dataclass(frozen=True)
class Normalization:
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray
    x_min: np.ndarray  # clamping envelope, from the training inputs
    x_max: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray) -> "Normalization":
        def _std(a):
            s = a.std(axis=0)
            return np.where(s > 1e-12, s, 1.0)

        return cls(x.mean(axis=0), _std(x), y.mean(axis=0), _std(y), x.min(axis=0), x.max(axis=0))


@dataclass(frozen=True)
class SurrogateModel:
    w1: np.ndarray  # (hidden, inputs)
    b1: np.ndarray
    w2: np.ndarray  # (outputs, hidden)
    b2: np.ndarray
    norm: Normalization
    label: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @classmethod
    def from_network(cls, net: TransitionNet, norm: Normalization, label: str = "",
                     metadata: dict | None = None) -> "SurrogateModel":
        first, last = net.net[0], net.net[2]
        as_np = lambda t: t.detach().cpu().to(torch.float64).numpy().copy()  # noqa: E731
        return cls(
            as_np(first.weight), as_np(first.bias), as_np(last.weight), as_np(last.bias),
            norm, label, dict(metadata or {}),
        )

    def to_network(self) -> TransitionNet:
        net = TransitionNet(self.w1.shape[1], self.hidden, self.w2.shape[0]).double()
        with torch.no_grad():
            net.net[0].weight.copy_(torch.from_numpy(self.w1))
            net.net[0].bias.copy_(torch.from_numpy(self.b1))
            net.net[2].weight.copy_(torch.from_numpy(self.w2))
            net.net[2].bias.copy_(torch.from_numpy(self.b2))
        return net

    def forward_inputs(self, x: np.ndarray, warn: bool = True) -> np.ndarray:
        """Raw (n, 4) inputs to (n, 2) outputs, clamping to the training envelope."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        clipped = np.clip(x, self.norm.x_min, self.norm.x_max)
        if warn:
            n_out = int(np.count_nonzero(np.any(clipped != x, axis=1)))
            if n_out:
                logger.warning(
                    "[surrogate] %d of %d inputs outside the training envelope were clamped",
                    n_out, x.shape[0],
                )
        z = (clipped - self.norm.x_mean) / self.norm.x_std
        h = np.tanh(z @ self.w1.T + self.b1)
        return (h @ self.w2.T + self.b2) * self.norm.y_std + self.norm.y_mean

    def predict_batch(self, action_sign, t_in_prev, t_out_prev, t_out):
        x = np.column_stack(np.broadcast_arrays(
            np.asarray(action_sign, dtype=float), np.asarray(t_in_prev, dtype=float),
            np.asarray(t_out_prev, dtype=float), np.asarray(t_out, dtype=float),
        ))
        y = self.forward_inputs(x)
        return y[:, 0], np.clip(y[:, 1], 0.0, 1.0)

    def predict_slot(self, action: Action, t_in_prev: float, t_out_prev: float,
                     t_out: float) -> tuple[float, float]:
        t_next, frac = self.predict_batch(Action.parse(action).sign, t_in_prev, t_out_prev, t_out)
        on = 0.0 if Action.parse(action) is Action.OFF else float(frac[0])
        return float(t_next[0]), on

    # -------------------------------------------------------------- files

    def to_dict(self) -> dict:
        def mat(a):
            a = np.asarray(a, dtype=float)
            return {"shape": list(a.shape), "data": a.ravel(order="C").tolist()}

        n = self.norm
        return {
            "format": "pcm_hems.surrogate",
            "format_version": FORMAT_VERSION,
            "label": self.label,
            "inputs": list(INPUT_NAMES),
            "outputs": list(OUTPUT_NAMES),
            "hidden": self.hidden,
            "activation": "tanh",
            "normalization": {
                "x_mean": n.x_mean.tolist(), "x_std": n.x_std.tolist(),
                "y_mean": n.y_mean.tolist(), "y_std": n.y_std.tolist(),
                "x_min": n.x_min.tolist(), "x_max": n.x_max.tolist(),
            },
            "weights": {"w1": mat(self.w1), "b1": mat(self.b1), "w2": mat(self.w2), "b2": mat(self.b2)},
            "metadata": self.metadata,
        }

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        logger.info("[surrogate] model '%s' saved to %s", self.label, path)
        return path

    @classmethod
    def from_dict(cls, doc: dict) -> "SurrogateModel":
        if doc.get("format") != "pcm_hems.surrogate":
            raise LoadError("not a surrogate model file")
        if doc.get("format_version") != FORMAT_VERSION:
            raise LoadError(f"unsupported surrogate format version {doc.get('format_version')}")
        if doc.get("activation") != "tanh" or tuple(doc.get("inputs", ())) != INPUT_NAMES:
            raise LoadError("surrogate file describes a different network signature")
        try:
            w = {k: np.asarray(v["data"], dtype=float).reshape(v["shape"]) for k, v in doc["weights"].items()}
            n = {k: np.asarray(v, dtype=float) for k, v in doc["normalization"].items()}
            norm = Normalization(n["x_mean"], n["x_std"], n["y_mean"], n["y_std"], n["x_min"], n["x_max"])
            return cls(w["w1"], w["b1"], w["w2"], w["b2"], norm, doc.get("label", ""), doc.get("metadata", {}))
        except (KeyError, ValueError) as e:
            raise LoadError(f"malformed surrogate file: {e}") from e

    @classmethod
    def load(cls, path: str | Path) -> "SurrogateModel":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise LoadError(f"cannot read surrogate file {path}: {e}") from e
        return cls.from_dict(doc)


def predict(model: SurrogateModel, action: Action, t_in_prev: float, t_out_prev: float,
            t_out: float) -> float:
    """Next-slot indoor temperature in C."""
    return model.predict_slot(action, t_in_prev, t_out_prev, t_out)[0]


def surrogate_path(directory: str | Path, label: str) -> Path:
    return Path(directory) / f"surrogate_{label}.json"


def report_path(model_path: str | Path) -> Path:
    p = Path(model_path)
    return p.with_name(p.stem + ".validation.json")
