"""Layer MAC counting and total DSP operations."""

from fractions import Fraction

import pytest

from dsppack.network import (
    LayerSpec,
    MissingEntryError,
    NetworkSpec,
    assignment_from_dict,
    assignment_to_dict,
    op_dsp,
    op_mul,
)
from dsppack.packing import KernelPackingConfig, PackingChoice
from dsppack.profiles import DSP48E2
from dsppack.table import LookupTable, build_identity_table


def conv(name="c", kind="conv", c_in=1, c_out=1, k=1, h=1, w=1, groups=1):
    return LayerSpec(name=name, op_kind=kind, c_in=c_in, c_out=c_out,
                     k_h=k, k_w=k, h_out=h, w_out=w, groups=groups)


def table_with(cells: dict, kernel_shape=(1, 1)) -> LookupTable:
    """A complete identity table overridden at chosen cells with real
    higher-throughput kernel configs (valid on the default profile)."""
    t = build_identity_table(DSP48E2, kernel_shape)
    for (w, a), (n_d, n_e, g_b) in cells.items():
        cfg = KernelPackingConfig(d_b=w, e_b=a, g_b=g_b, n_d=n_d, n_e=n_e)
        t.entries[(w, a)] = PackingChoice(
            strategy="kernel", config=cfg, t_mul=Fraction(n_d * n_e),
            e_g=g_b, correction_gates=0, cell_w_b=w, cell_a_b=a)
    return t


class TestOpMul:
    def test_minimal_conv(self):
        assert op_mul(conv()) == 1

    def test_3x3_conv(self):
        # 20*20 output, 3x3 kernel, 16 -> 32 channels
        layer = conv(c_in=16, c_out=32, k=3, h=20, w=20)
        assert op_mul(layer) == 20 * 20 * 9 * 16 * 32 == 1_843_200

    def test_depthwise(self):
        layer = conv(kind="depthwise_conv", c_in=32, c_out=32, k=3,
                     h=10, w=10, groups=32)
        assert op_mul(layer) == 10 * 10 * 9 * 32 == 28_800

    def test_fully_connected(self):
        layer = LayerSpec(name="fc", op_kind="fully_connected", c_in=128,
                          c_out=10, k_h=1, k_w=1, h_out=1, w_out=1, groups=1)
        assert op_mul(layer) == 1280

    def test_invalid_groups(self):
        with pytest.raises(ValueError):
            conv(c_in=3, c_out=4, groups=2)


class TestOpDsp:
    def test_identity_throughput_sums_op_mul(self):
        net = NetworkSpec(layers=[
            conv("a", c_in=4, c_out=4, k=1, h=5, w=5),
            conv("b", c_in=2, c_out=8, k=1, h=3, w=3),
        ])
        bits = {"a": (4, 4), "b": (6, 5)}
        t = build_identity_table(DSP48E2)
        total = op_dsp(net, bits, t)
        assert total == sum(op_mul(l) for l in net.layers)

    def test_single_layer_full_packing(self):
        net = NetworkSpec(layers=[conv("a", c_in=3, c_out=4, k=1, h=1, w=1)])
        t = table_with({(2, 2): (2, 3, 2)})  # t_mul = 6
        # op_mul = 12, t_mul = 12 would give 1; here 12/6 = 2
        assert op_dsp(net, {"a": (2, 2)}, t) == 2

    def test_two_layer_worked_example(self):
        # 100 multiplications at throughput 4 plus 60 at throughput 6 -> 35
        net = NetworkSpec(layers=[
            conv("a", c_in=1, c_out=1, k=1, h=10, w=10),
            conv("b", c_in=1, c_out=1, k=1, h=6, w=10),
        ])
        assert op_mul(net.layers[0]) == 100
        assert op_mul(net.layers[1]) == 60
        t = table_with({(4, 4): (2, 2, 0), (2, 2): (2, 3, 2)})
        total = op_dsp(net, {"a": (4, 4), "b": (2, 2)}, t)
        assert total == Fraction(100, 4) + Fraction(60, 6) == 35

    def test_missing_entry(self):
        net = NetworkSpec(layers=[conv("a")])
        t = build_identity_table(DSP48E2, bits_range=(2, 8))
        with pytest.raises(MissingEntryError):
            op_dsp(net, {"a": (9, 9)}, t)

    def test_missing_layer_in_assignment(self):
        net = NetworkSpec(layers=[conv("a"), conv("b")])
        t = build_identity_table(DSP48E2)
        with pytest.raises(MissingEntryError):
            op_dsp(net, {"a": (4, 4)}, t)

    def test_layer_contributions_independent(self):
        layers = [conv("a", c_in=4, c_out=4, h=3, w=3),
                  conv("b", c_in=2, c_out=2, h=5, w=5),
                  conv("c", c_in=8, c_out=2, h=2, w=2)]
        net = NetworkSpec(layers=layers)
        bits = {n: (3, 3) for n in "abc"}
        t = build_identity_table(DSP48E2)
        full = op_dsp(net, bits, t)
        without_b = op_dsp(NetworkSpec(layers=[layers[0], layers[2]]), bits, t)
        assert full - without_b == Fraction(op_mul(layers[1]))

    def test_monotone_in_throughput(self):
        net = NetworkSpec(layers=[conv("a", c_in=3, c_out=4, h=2, w=2)])
        low = table_with({(4, 4): (2, 1, 0)})   # t = 2
        high = table_with({(4, 4): (2, 2, 0)})  # t = 4
        assert op_dsp(net, {"a": (4, 4)}, high) < op_dsp(net, {"a": (4, 4)}, low)


class TestSerialization:
    def test_net_roundtrip(self):
        net = NetworkSpec(layers=[
            conv("a", c_in=3, c_out=16, k=3, h=32, w=32),
            LayerSpec(name="fc", op_kind="fully_connected", c_in=64, c_out=10,
                      k_h=1, k_w=1, h_out=1, w_out=1, groups=1,
                      frozen_bits=(8, 8)),
        ])
        doc = net.to_dict()
        back = NetworkSpec.from_dict(doc)
        assert back == net
        assert back.layers[1].frozen_bits == (8, 8)

    def test_assignment_roundtrip(self):
        bits = {"a": (4, 4), "fc": (8, 8)}
        assert assignment_from_dict(assignment_to_dict(bits)) == bits

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            NetworkSpec(layers=[conv("a"), conv("a")])
