"""Super-net with candidate quantization branches per layer.

Every layer keeps one latent weight tensor shared by all candidates
(quantized per-branch on the fly) and a pair of selection-logit vectors,
one over weight widths and one over activation widths.  Forward
propagation mixes the quantized branches by their selection probabilities;
frozen layers carry a single pinned candidate.
"""

from __future__ import annotations

import torch
from torch import nn

from .quantize import quantize_activation, quantize_weight


class BranchingLayer(nn.Module):
    """One conv/fc stage with probability-mixed quantization branches."""

    def __init__(self, layer: dict, widths: list[int], pool: int = 1):
        super().__init__()
        self.spec = dict(layer)
        self.widths = list(widths)
        self.pool = pool
        k = (layer["k_h"], layer["k_w"])
        if layer["op_kind"] == "fully_connected":
            self.weight = nn.Parameter(
                torch.empty(layer["c_out"], layer["c_in"]))
        else:
            self.weight = nn.Parameter(torch.empty(
                layer["c_out"], layer["c_in"] // layer["groups"], *k))
        nn.init.kaiming_uniform_(self.weight, a=5 ** 0.5)
        self.bias = nn.Parameter(torch.zeros(layer["c_out"]))

        frozen = layer.get("frozen_bits")
        if frozen:
            pair = (frozen["w_b"], frozen["a_b"])
            if pair[0] not in widths or pair[1] not in widths:
                raise ValueError(f"{layer['name']}: frozen bits outside table")
            self.frozen = pair
            self.logits_w = None
            self.logits_a = None
        else:
            self.frozen = None
            self.logits_w = nn.Parameter(torch.zeros(len(widths)))
            self.logits_a = nn.Parameter(torch.zeros(len(widths)))

    def probabilities(self) -> tuple[torch.Tensor, torch.Tensor]:
        if self.frozen is not None:
            pi = torch.zeros(len(self.widths), dtype=torch.float64)
            pw, pa = pi.clone(), pi.clone()
            pw[self.widths.index(self.frozen[0])] = 1.0
            pa[self.widths.index(self.frozen[1])] = 1.0
            return pw, pa
        return (torch.softmax(self.logits_w.double(), 0),
                torch.softmax(self.logits_a.double(), 0))

    def chosen_pair(self) -> tuple[int, int]:
        """Highest-probability candidate pair."""
        if self.frozen is not None:
            return self.frozen
        return (self.widths[int(torch.argmax(self.logits_w))],
                self.widths[int(torch.argmax(self.logits_a))])

    def _mix_weight(self) -> torch.Tensor:
        if self.frozen is not None:
            return quantize_weight(self.weight, self.frozen[0])
        pi = torch.softmax(self.logits_w, 0)
        mixed = None
        for p, b in zip(pi, self.widths):
            q = p * quantize_weight(self.weight, b)
            mixed = q if mixed is None else mixed + q
        return mixed

    def _mix_activation(self, x: torch.Tensor) -> torch.Tensor:
        if self.frozen is not None:
            return quantize_activation(x, self.frozen[1])
        pi = torch.softmax(self.logits_a, 0)
        mixed = None
        for p, b in zip(pi, self.widths):
            q = p * quantize_activation(x, b)
            mixed = q if mixed is None else mixed + q
        return mixed

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self._mix_activation(x)
        w = self._mix_weight()
        if self.spec["op_kind"] == "fully_connected":
            x = torch.flatten(x, 1)
            x = torch.nn.functional.linear(x, w, self.bias)
        else:
            x = torch.nn.functional.conv2d(
                x, w, self.bias, padding="same", groups=self.spec["groups"])
            x = torch.relu(x)
            if self.pool > 1:
                x = torch.nn.functional.max_pool2d(x, self.pool)
        return x


class Supernet(nn.Module):
    """Sequential super-net assembled from a network document.

    Spatial reductions are recovered from consecutive output sizes (a layer
    whose input map is larger than its output gets a trailing max-pool).
    """

    def __init__(self, layers: list[dict], widths: list[int]):
        super().__init__()
        mods = []
        for i, layer in enumerate(layers):
            pool = 1
            if layer["op_kind"] != "fully_connected" and i + 1 < len(layers):
                nxt = layers[i + 1]
                if nxt["op_kind"] == "fully_connected":
                    side = int(round((nxt["c_in"] // layer["c_out"]) ** 0.5))
                    pool = max(1, layer["h_out"] // max(side, 1))
                else:
                    pool = max(1, layer["h_out"] // nxt["h_out"])
            mods.append(BranchingLayer(layer, widths, pool=pool))
        self.stages = nn.ModuleList(mods)
        self.layer_docs = layers
        self.widths = list(widths)

    def forward(self, x):
        for stage in self.stages:
            x = stage(x)
        return x

    def selection_parameters(self):
        for stage in self.stages:
            if stage.logits_w is not None:
                yield stage.logits_w
                yield stage.logits_a

    def weight_parameters(self):
        for stage in self.stages:
            yield stage.weight
            yield stage.bias

    def probabilities(self) -> dict:
        return {s.spec["name"]: s.probabilities() for s in self.stages}

    def assignment(self) -> dict:
        return {s.spec["name"]: s.chosen_pair() for s in self.stages}


def toy_network() -> list[dict]:
    """The bundled desk-scale backbone: six 3x3 convolutions and a
    classifier head over 32x32 inputs, boundary layers pinned to 8 bits."""

    def conv(name, c_in, c_out, h, frozen=None):
        doc = {"name": name, "op_kind": "conv", "c_in": c_in, "c_out": c_out,
               "k_h": 3, "k_w": 3, "h_out": h, "w_out": h, "groups": 1}
        if frozen:
            doc["frozen_bits"] = {"w_b": frozen[0], "a_b": frozen[1]}
        return doc

    return [
        conv("conv1", 3, 8, 32, frozen=(8, 8)),
        conv("conv2", 8, 16, 32),
        conv("conv3", 16, 16, 16),
        conv("conv4", 16, 32, 16),
        conv("conv5", 32, 32, 8),
        conv("conv6", 32, 32, 8),
        {"name": "fc", "op_kind": "fully_connected", "c_in": 32 * 4 * 4,
         "c_out": 10, "k_h": 1, "k_w": 1, "h_out": 1, "w_out": 1,
         "groups": 1, "frozen_bits": {"w_b": 8, "a_b": 8}},
    ]
