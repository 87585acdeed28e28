"""Complexity loss: expectation structure and gradient correctness."""

import numpy as np
import torch

from bitsearch.losses import loss_comp, weighted_throughput
from bitsearch.lut import exact_op_dsp, load_tables
from bitsearch.supernet import toy_network


def one_hot(widths, value):
    v = torch.zeros(len(widths), dtype=torch.float64)
    v[widths.index(value)] = 1.0
    return v


class TestWeightedThroughput:
    def test_one_hot_reduces_to_table_entry(self, lut_paths):
        tables = load_tables(lut_paths)
        layer = {"op_kind": "conv", "k_h": 3, "k_w": 3}
        t = tables.for_layer(layer)
        for (w, a), frac in list(t.exact.items())[::5]:
            got = weighted_throughput(layer, one_hot(t.widths, w),
                                      one_hot(t.widths, a), tables)
            assert got.item() == float(frac)

    def test_uniform_over_two_entries(self, lut_paths):
        tables = load_tables(lut_paths)
        layer = {"op_kind": "conv", "k_h": 3, "k_w": 3}
        t = tables.for_layer(layer)
        pi_w = one_hot(t.widths, 4)
        pi_a = (one_hot(t.widths, 2) + one_hot(t.widths, 8)) / 2
        want = (float(t.exact[(4, 2)]) + float(t.exact[(4, 8)])) / 2
        got = weighted_throughput(layer, pi_w, pi_a, tables)
        assert got.item() == want

    def test_candidate_order_irrelevant(self, lut_paths):
        tables = load_tables(lut_paths)
        layer = {"op_kind": "conv", "k_h": 3, "k_w": 3}
        t = tables.for_layer(layer)
        g = torch.Generator().manual_seed(0)
        pi_w = torch.rand(len(t.widths), generator=g, dtype=torch.float64)
        pi_a = torch.rand(len(t.widths), generator=g, dtype=torch.float64)
        pi_w, pi_a = pi_w / pi_w.sum(), pi_a / pi_a.sum()
        base = weighted_throughput(layer, pi_w, pi_a, tables).item()
        # permuting candidates together with their table rows is a no-op
        perm = torch.randperm(len(t.widths), generator=g)
        grid = t.grid.clone()
        t.grid = grid[perm][:, perm]
        try:
            permuted = weighted_throughput(
                layer, pi_w[perm], pi_a[perm], tables).item()
        finally:
            t.grid = grid
        assert abs(base - permuted) < 1e-12


class TestLossComp:
    def test_one_hot_equals_exact_op_dsp(self, lut_paths):
        tables = load_tables(lut_paths)
        layers = toy_network()
        widths = tables.by_shape[(3, 3)].widths
        rng = np.random.default_rng(1)
        for _ in range(5):
            assignment = {}
            pis = {}
            for l in layers:
                frozen = l.get("frozen_bits")
                if frozen:
                    pair = (frozen["w_b"], frozen["a_b"])
                else:
                    pair = (int(rng.integers(2, 9)), int(rng.integers(2, 9)))
                assignment[l["name"]] = pair
                pis[l["name"]] = (one_hot(widths, pair[0]),
                                  one_hot(widths, pair[1]))
            exact = exact_op_dsp(layers, assignment, tables)
            approx = loss_comp(layers, pis, tables).item()
            assert abs(approx - float(exact)) <= 1e-9 * float(exact)

    def test_single_layer_single_candidate(self, lut_paths):
        tables = load_tables(lut_paths)
        layer = toy_network()[1]  # unfrozen conv
        widths = tables.by_shape[(3, 3)].widths
        pis = {layer["name"]: (one_hot(widths, 4), one_hot(widths, 4))}
        got = loss_comp([layer], pis, tables).item()
        from bitsearch.lut import layer_op_mul

        t = float(tables.by_shape[(3, 3)].exact[(4, 4)])
        assert got == layer_op_mul(layer) / t

    def test_total_loss_eta_zero_is_accuracy_only(self, lut_paths):
        from bitsearch.losses import total_loss

        tables = load_tables(lut_paths)
        layers = toy_network()
        widths = tables.by_shape[(3, 3)].widths
        pis = {l["name"]: (one_hot(widths, 4), one_hot(widths, 4))
               for l in layers}
        acc = torch.tensor(1.5, dtype=torch.float64)
        assert total_loss(acc, layers, pis, tables, 0.0) is acc

    def test_total_loss_monotone_in_eta(self, lut_paths):
        from bitsearch.losses import total_loss

        tables = load_tables(lut_paths)
        layers = toy_network()
        widths = tables.by_shape[(3, 3)].widths
        pis = {l["name"]: (one_hot(widths, 4), one_hot(widths, 4))
               for l in layers}
        acc = torch.tensor(1.5, dtype=torch.float64)
        values = [total_loss(acc, layers, pis, tables, eta).item()
                  for eta in (0.0, 1e-7, 1e-5, 1e-3)]
        assert values == sorted(values)
        assert values[0] < values[-1]

    def test_gradient_matches_central_differences(self, lut_paths):
        tables = load_tables(lut_paths)
        layers = toy_network()
        widths = tables.by_shape[(3, 3)].widths
        rng = np.random.default_rng(3)
        eps = 1e-6
        checked = 0
        for _ in range(100):
            pis = {}
            for l in layers:
                pw = torch.tensor(rng.dirichlet(np.ones(len(widths)) * 5),
                                  dtype=torch.float64, requires_grad=True)
                pa = torch.tensor(rng.dirichlet(np.ones(len(widths)) * 5),
                                  dtype=torch.float64, requires_grad=True)
                pis[l["name"]] = (pw, pa)
            loss = loss_comp(layers, pis, tables)
            loss.backward()
            # probe one random coordinate of one random layer per point
            lname = layers[int(rng.integers(len(layers)))]["name"]
            side = int(rng.integers(2))
            idx = int(rng.integers(len(widths)))
            target = pis[lname][side]
            analytic = target.grad[idx].item()

            def eval_at(delta):
                shifted = {
                    n: tuple(p.detach().clone() for p in pair)
                    for n, pair in pis.items()
                }
                shifted[lname][side][idx] += delta
                return loss_comp(layers, shifted, tables).item()

            numeric = (eval_at(eps) - eval_at(-eps)) / (2 * eps)
            denom = max(abs(analytic), abs(numeric), 1e-12)
            assert abs(analytic - numeric) / denom < 1e-4, (
                lname, side, idx, analytic, numeric)
            checked += 1
        assert checked == 100
