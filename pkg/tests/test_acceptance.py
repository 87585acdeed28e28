"""Acceptance criteria, one test per criterion, one printed line each.

Run as ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
pass/fail lines.  Criteria marked with time budgets assert them.
"""

import json
import time
from fractions import Fraction

import numpy as np
import pytest
from click.testing import CliRunner

from dsppack.allocate import (
    StageContext,
    brute_force_allocate,
    dp_allocate,
)
from dsppack.cli import main as cli_main
from dsppack.network import NetworkSpec, LayerSpec, op_dsp, op_mul
from dsppack.packing import GENERIC_SEQ_LEN, KernelPackingConfig, PackingChoice
from dsppack.profiles import DSP48E2
from dsppack.ridge import FEATURES, StagePredictor, fit_ridge, stage_features
from dsppack.simulate import SamplePolicy, verify_choice
from dsppack.table import (
    NoValidConfigError,
    build_identity_table,
    import_table,
    search_optimal,
)


def criterion(name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE [{name}]: {status}  {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def full_tables(tmp_path_factory):
    """Full-scale 3x3 and 1x1 tables, built and verified through the CLI
    with overpacking and separation enabled (default sweep policy)."""
    d = tmp_path_factory.mktemp("accept")
    runner = CliRunner()
    t0 = time.monotonic()
    paths = {}
    for shape in ("3x3", "1x1"):
        out = d / f"lut{shape}.json"
        res = runner.invoke(cli_main, [
            "pack-table", "--kernel", shape, "--allow-overpack",
            "--allow-separation", "-o", str(out)])
        assert res.exit_code == 0, res.output
        paths[shape] = out
    build_seconds = time.monotonic() - t0
    return d, paths, build_seconds


class TestPackingAnchors:
    """cmd_pack_search on the default 18/27/48 profile."""

    @pytest.mark.parametrize("wb,ab,kernel,want,label", [
        (4, 4, "1x1", 4, "int4-four-products"),
        (4, 4, "3x3", 6, "3x3-six-products"),
        (5, 8, "1x1", 2, "w5a8-two-products"),
        (2, 2, "3x3", 12, "ultra-low-twelve-products"),
    ])
    def test_anchor(self, tmp_path, wb, ab, kernel, want, label):
        runner = CliRunner()
        out = tmp_path / "choice.json"
        t0 = time.monotonic()
        res = runner.invoke(cli_main, [
            "pack-search", "--wb", str(wb), "--ab", str(ab),
            "--kernel", kernel, "--allow-overpack", "--allow-separation",
            "-o", str(out)])
        elapsed = time.monotonic() - t0
        assert res.exit_code == 0, res.output
        doc = json.loads(out.read_text())
        t = Fraction(doc["choice"]["t_mul"]["num"], doc["choice"]["t_mul"]["den"])
        criterion(f"anchor {label}", t >= want and elapsed < 1.0,
                  f"T_mul={t} (need >= {want}), {elapsed:.2f}s")


class TestBitExactness:
    def test_full_tables_zero_mismatches(self, full_tables, tmp_path):
        d, paths, build_seconds = full_tables
        runner = CliRunner()
        t0 = time.monotonic()
        totals = {}
        for shape, path in paths.items():
            report_path = tmp_path / f"report{shape}.json"
            res = runner.invoke(cli_main, [
                "pack-verify", str(path), "--exhaustive-bits", "20",
                "--samples", "100000", "-o", str(report_path)])
            assert res.exit_code == 0, res.output
            report = json.loads(report_path.read_text())
            totals[shape] = report["total_mismatches"]
            assert len(report["results"]) == 49
            for r in report["results"]:
                if r["mode"] == "sampled":
                    assert r["trials"] >= 100_000
        elapsed = time.monotonic() - t0 + build_seconds
        ok = all(v == 0 for v in totals.values()) and elapsed < 600
        criterion("bit-exactness full tables", ok,
                  f"mismatches={totals}, total {elapsed:.1f}s (< 600s)")


class TestTableProperties:
    def test_monotone_and_dominant(self, full_tables):
        d, paths, _ = full_tables
        t0 = time.monotonic()
        ok = True
        details = []
        for shape, path in paths.items():
            table = import_table(json.loads(path.read_text()))
            kernel = table.kernel_shape
            for w in range(2, 9):
                for a in range(2, 9):
                    if w < 8 and table.t_mul(w + 1, a) > table.t_mul(w, a):
                        ok = False
                        details.append(f"{shape} w-monotone broken at ({w},{a})")
                    if a < 8 and table.t_mul(w, a + 1) > table.t_mul(w, a):
                        ok = False
                        details.append(f"{shape} a-monotone broken at ({w},{a})")
                    for strat in ("kernel", "filter"):
                        try:
                            pure = search_optimal(
                                w, a, kernel, GENERIC_SEQ_LEN, DSP48E2,
                                allow_overpack=True, allow_separation=True,
                                strategies=(strat,))
                        except NoValidConfigError:
                            continue
                        if table.t_mul(w, a) < pure.t_mul:
                            ok = False
                            details.append(
                                f"{shape} ({w},{a}) dominated by pure {strat}")
        elapsed = time.monotonic() - t0
        criterion("table monotonicity+dominance", ok and elapsed < 60,
                  f"{elapsed:.1f}s" + ("; " + "; ".join(details) if details else ""))


class TestOverpackingCorrection:
    def test_exhaustive_over_all_overpacked_cells(self, full_tables):
        d, paths, _ = full_tables
        policy = SamplePolicy(exhaustive_bits=20, samples=100_000)
        checked = 0
        mismatches = 0
        for shape, path in paths.items():
            table = import_table(json.loads(path.read_text()))
            for cell, choice in sorted(table.entries.items()):
                if not choice.overpacked:
                    continue
                widths_total = (
                    choice.config.n_d * choice.config.d_b
                    + choice.config.n_e * choice.config.e_b
                    if choice.strategy == "kernel"
                    else choice.config.k_p * (choice.cell_w_b if choice.split_operand == "weight" else choice.config.w_b)
                    + choice.config.n_p * (choice.cell_a_b if choice.split_operand == "activation" else choice.config.a_b))
                if widths_total > 20:
                    continue
                report = verify_choice(choice, DSP48E2, policy)
                assert report["mode"] == "exhaustive"
                checked += 1
                mismatches += report["mismatches"]
        criterion("overpacking correction exhaustive", mismatches == 0 and checked > 0,
                  f"{checked} overpacked cells swept, {mismatches} mismatches")


class TestOpDspIdentities:
    def test_unit_throughput_sums_op_mul(self):
        layers = [
            LayerSpec("c1", "conv", 4, 8, 3, 3, 10, 10, 1),
            LayerSpec("c2", "pointwise_conv", 8, 16, 1, 1, 10, 10, 1),
            LayerSpec("fc", "fully_connected", 64, 10, 1, 1, 1, 1, 1),
        ]
        net = NetworkSpec(layers=layers)
        bits = {l.name: (5, 5) for l in layers}
        unit = [build_identity_table(DSP48E2, (1, 1)),
                build_identity_table(DSP48E2, (3, 3))]
        total = op_dsp(net, bits, unit)
        want = sum(op_mul(l) for l in layers)
        criterion("unit-throughput identity", total == want,
                  f"Op_dsp={total} == sum Op_mul={want}")

    def test_two_layer_worked_example(self):
        net = NetworkSpec(layers=[
            LayerSpec("a", "conv", 1, 1, 1, 1, 10, 10, 1),
            LayerSpec("b", "conv", 1, 1, 1, 1, 6, 10, 1),
        ])
        table = build_identity_table(DSP48E2)
        table.entries[(4, 4)] = PackingChoice(
            "kernel", KernelPackingConfig(4, 4, 0, 2, 2), Fraction(4), 0, 0, 4, 4)
        table.entries[(2, 2)] = PackingChoice(
            "kernel", KernelPackingConfig(2, 2, 2, 2, 3), Fraction(6), 2, 0, 2, 2)
        total = op_dsp(net, {"a": (4, 4), "b": (2, 2)}, table)
        criterion("two-layer worked example", total == 35,
                  f"100/4 + 60/6 = {total}")


def _predictor(seed):
    rng = np.random.default_rng(seed)
    rows = [
        stage_features(int(rng.integers(1, 48)), int(rng.integers(0, 6)),
                       int(rng.integers(2, 9)), int(rng.integers(2, 9)),
                       int(rng.integers(100, 9000)), int(rng.choice([1, 9])))
        for _ in range(100)
    ]
    X = np.asarray(rows)
    coef = {
        "dsp": {"pf_dsp": float(rng.uniform(0.5, 1.5)),
                "bias": float(rng.uniform(0, 3))},
        "lut": {"pf_lut": float(rng.uniform(200, 500)),
                "pf_dsp": float(rng.uniform(2, 9)),
                "bias": float(rng.uniform(100, 900))},
        "wns": {"pf_dsp": float(rng.uniform(-0.06, -0.005)),
                "bias": float(rng.uniform(0.8, 2.5))},
    }
    targets = {t: X @ np.array([coef[t].get(f, 0.0) for f in FEATURES])
               for t in coef}
    return StagePredictor.fit(rows, targets)


class TestDpCorrectness:
    def test_differential_and_monotone(self):
        rng = np.random.default_rng(2024)
        t0 = time.monotonic()
        disagreements = 0
        for _ in range(50):
            pred = _predictor(int(rng.integers(0, 1 << 31)))
            contexts = [
                StageContext(f"s{i}", 1000, 9, 4, 4,
                             Fraction(int(rng.integers(40, 4000))),
                             c_out=int(rng.choice([3, 4])))
                for i in range(int(rng.integers(1, 5)))
            ]
            rd = int(rng.integers(0, 36))
            rl = int(rng.integers(0, 6001))
            lut_rep = bool(rng.integers(0, 2))
            dp = dp_allocate(contexts, pred, rd, rl, pf_cap=6, lut_unit=500,
                             lut_replacement=lut_rep)
            bf = brute_force_allocate(contexts, pred, rd, rl, pf_cap=6,
                                      lut_unit=500, lut_replacement=lut_rep)
            if (dp.feasible, dp.latency) != (bf.feasible, bf.latency):
                disagreements += 1
        elapsed = time.monotonic() - t0
        criterion("dp==brute 50 instances", disagreements == 0 and elapsed < 120,
                  f"{disagreements} disagreements, {elapsed:.1f}s")

    def test_budget_ladder_monotone(self):
        pred = _predictor(7)
        contexts = [StageContext(f"s{i}", 1000, 9, 4, 4, Fraction(v), c_out=4)
                    for i, v in enumerate([2048, 1024, 512])]
        prev = None
        ok = True
        for rd in range(4, 44, 4):  # 10-point ladder
            res = dp_allocate(contexts, pred, rd, 4000, pf_cap=16)
            if not res.feasible:
                continue
            if prev is not None and res.latency > prev:
                ok = False
            prev = res.latency
        criterion("budget ladder monotone", ok and prev is not None,
                  f"final Lat={prev}")


class TestRegression:
    def test_noiseless_recovery(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(-2, 2, size=(80, 6))
        X[:, -1] = 1.0
        coefs = rng.uniform(-3, 3, size=6)
        y = X @ coefs
        model = fit_ridge(X, y)
        got = np.array([model.predict(x) for x in X])
        rel = np.abs(got - y) / np.maximum(np.abs(y), 1e-9)
        criterion("regression noiseless 1e-6", rel.max() < 1e-6,
                  f"max rel err {rel.max():.2e}")

    def test_fixed_mode_equals_closed_form(self):
        rng = np.random.default_rng(12)
        X = rng.uniform(-2, 2, size=(60, 5))
        X[:, -1] = 1.0
        y = X @ rng.uniform(-1, 1, 5) + rng.normal(0, 0.2, 60)
        alpha, lam = 4.0, 0.5
        model = fit_ridge(X, y, alpha=alpha, lambda_=lam)
        Xn = (X - model.mean) / model.std
        oracle = np.linalg.solve(Xn.T @ Xn + (lam / alpha) * np.eye(5), Xn.T @ y)
        err = np.abs(model.coefficients - oracle).max()
        criterion("regression fixed == closed form 1e-8", err < 1e-8,
                  f"max abs err {err:.2e}")


class TestDeterminism:
    def test_every_command_byte_identical(self, full_tables, tmp_path):
        d, paths, _ = full_tables
        runner = CliRunner()
        net = {
            "version": 1,
            "layers": [
                {"name": "c1", "op_kind": "conv", "c_in": 3, "c_out": 4,
                 "k_h": 3, "k_w": 3, "h_out": 8, "w_out": 8, "groups": 1},
                {"name": "c2", "op_kind": "pointwise_conv", "c_in": 4,
                 "c_out": 8, "k_h": 1, "k_w": 1, "h_out": 8, "w_out": 8,
                 "groups": 1},
            ],
        }
        assign = {"c1": {"w_b": 4, "a_b": 4}, "c2": {"w_b": 3, "a_b": 5}}
        gen = {
            "version": 1, "n_samples": 60,
            "ranges": {"pf_dsp": [1, 16], "pf_lut": [0, 2], "w_b": [2, 8],
                       "a_b": [2, 8], "op_mul": [100, 9000],
                       "kernel_area": [1, 9]},
            "targets": {
                "dsp": {"coef": {"pf_dsp": 1.0, "bias": 1.0}},
                "lut": {"coef": {"pf_lut": 300.0, "bias": 200.0},
                        "noise_std": 5.0},
                "wns": {"coef": {"pf_dsp": -0.03, "bias": 2.0},
                        "noise_std": 0.01},
            },
        }
        (tmp_path / "net.json").write_text(json.dumps(net))
        (tmp_path / "assign.json").write_text(json.dumps(assign))
        (tmp_path / "gen.json").write_text(json.dumps(gen))
        fast = ["--exhaustive-bits", "12", "--samples", "2000", "--seed", "5"]
        lut33, lut11 = str(paths["3x3"]), str(paths["1x1"])

        def cost_train_then(outname):
            return ["cost", "train", str(tmp_path / "samples1.csv"),
                    "-o", outname]

        commands = {
            "pack-search": ["pack-search", "--wb", "3", "--ab", "6",
                            "--kernel", "3x3", "--allow-overpack",
                            "--allow-separation"],
            "pack-table": ["pack-table", "--kernel", "1x1", "--bits", "2..4",
                           *fast],
            "pack-verify": ["pack-verify", lut11, *fast],
            "model-ops": ["model-ops", str(tmp_path / "net.json"),
                          "--bits", str(tmp_path / "assign.json"),
                          "--lut", lut33, "--lut", lut11],
            "cost-synth": ["cost", "synth", "--spec", str(tmp_path / "gen.json"),
                           "--seed", "21"],
        }
        all_ok = True
        details = []
        for name, args in commands.items():
            outs = []
            for i in (1, 2):
                out = tmp_path / f"{name}-{i}.out"
                res = runner.invoke(cli_main, args + ["-o", str(out)])
                if res.exit_code != 0:
                    all_ok = False
                    details.append(f"{name} exit {res.exit_code}")
                    break
                outs.append(out.read_bytes())
            if len(outs) == 2 and outs[0] != outs[1]:
                all_ok = False
                details.append(f"{name} differs")

        # cost train and alloc consume earlier outputs; chain them
        synth_out = tmp_path / "samples1.csv"
        runner.invoke(cli_main, ["cost", "synth", "--spec",
                                 str(tmp_path / "gen.json"), "--seed", "21",
                                 "-o", str(synth_out)])
        for name, args in {
            "cost-train": cost_train_then,
            "alloc-run": lambda o: ["alloc", "run", str(tmp_path / "net.json"),
                                    "--bits", str(tmp_path / "assign.json"),
                                    "--lut", lut33, "--lut", lut11,
                                    "--cost", str(tmp_path / "cost-train-1.out"),
                                    "--dsp-budget", "40", "--lut-budget",
                                    "20000", "--pf-cap", "8", "-o", o],
            "alloc-brute": lambda o: ["alloc", "brute", str(tmp_path / "net.json"),
                                      "--bits", str(tmp_path / "assign.json"),
                                      "--lut", lut33, "--lut", lut11,
                                      "--cost", str(tmp_path / "cost-train-1.out"),
                                      "--dsp-budget", "40", "--lut-budget",
                                      "20000", "--pf-cap", "8", "-o", o],
        }.items():
            outs = []
            for i in (1, 2):
                out = tmp_path / f"{name}-{i}.out"
                res = runner.invoke(cli_main, args(str(out)))
                if res.exit_code != 0:
                    all_ok = False
                    details.append(f"{name} exit {res.exit_code}: {res.output}")
                    break
                outs.append(out.read_bytes())
            if len(outs) == 2 and outs[0] != outs[1]:
                all_ok = False
                details.append(f"{name} differs")
        criterion("determinism all commands", all_ok, "; ".join(details))
