"""Super-net structure: branch mixing, frozen layers, argmax extraction."""

import torch

from bitsearch.lut import load_tables
from bitsearch.supernet import Supernet, toy_network


def build(lut_paths):
    tables = load_tables(lut_paths)
    widths = tables.by_shape[(3, 3)].widths
    torch.manual_seed(0)
    return Supernet(toy_network(), widths), tables


class TestStructure:
    def test_forward_shapes(self, lut_paths):
        net, _ = build(lut_paths)
        x = torch.rand(4, 3, 32, 32)
        out = net(x)
        assert out.shape == (4, 10)

    def test_frozen_layers_have_no_selection_params(self, lut_paths):
        net, _ = build(lut_paths)
        frozen = [s for s in net.stages if s.frozen is not None]
        assert len(frozen) == 2  # first and last
        assert all(s.logits_w is None for s in frozen)
        sel = list(net.selection_parameters())
        assert len(sel) == 2 * (len(net.stages) - 2)

    def test_probabilities_normalized(self, lut_paths):
        net, _ = build(lut_paths)
        for name, (pw, pa) in net.probabilities().items():
            assert abs(pw.sum().item() - 1.0) < 1e-9
            assert abs(pa.sum().item() - 1.0) < 1e-9

    def test_frozen_assignment_pinned(self, lut_paths):
        net, _ = build(lut_paths)
        assignment = net.assignment()
        assert assignment["conv1"] == (8, 8)
        assert assignment["fc"] == (8, 8)


class TestArgmaxInvariance:
    def test_positive_logit_scaling_keeps_argmax(self, lut_paths):
        net, _ = build(lut_paths)
        stage = net.stages[1]
        with torch.no_grad():
            stage.logits_w.copy_(torch.randn(len(stage.widths)))
            stage.logits_a.copy_(torch.randn(len(stage.widths)))
        before = stage.chosen_pair()
        for scale in (0.1, 3.0, 17.0):
            with torch.no_grad():
                stage.logits_w.mul_(scale)
                stage.logits_a.mul_(scale)
            assert stage.chosen_pair() == before
            with torch.no_grad():
                stage.logits_w.div_(scale)
                stage.logits_a.div_(scale)

    def test_gradients_reach_selection_logits(self, lut_paths):
        net, tables = build(lut_paths)
        from bitsearch.losses import loss_comp

        comp = loss_comp(net.layer_docs, net.probabilities(), tables)
        comp.backward()
        stage = net.stages[2]
        assert stage.logits_w.grad is not None
        assert stage.logits_w.grad.abs().sum() > 0
