"""Command-line entry point.

Subcommands cover the full pipeline: optimal-packing search, table
construction and verification, network DSP-operation scoring, cost-model
training and synthetic sampling, and pipeline resource allocation.

Exit codes: 0 success, 1 domain failure (verification mismatch, infeasible
allocation, missing table entry), 2 usage or schema error.  Every machine
output re-validates against its schema before the command exits 0.
"""

from __future__ import annotations

import json
import sys
from fractions import Fraction

import click

from . import allocate as alloc_mod
from . import network as net_mod
from . import ridge as ridge_mod
from . import table as table_mod
from .packing import GENERIC_SEQ_LEN, SIGNEDNESS_MODES, NoValidConfigError
from .profiles import load_profile
from .schemas import SchemaError, validate_document
from .simulate import SamplePolicy, VerificationFailure, verify_choice

CHOICE_DOC_VERSION = 1
REPORT_DOC_VERSION = 1
OPS_DOC_VERSION = 1


def _write_json(path, doc, kind):
    validate_document(doc, kind)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path == "-":
        click.echo(text, nl=False)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _read_json(path, kind):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    validate_document(doc, kind)
    return doc


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


class KernelShape(click.ParamType):
    name = "HxW"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            h, w = value.lower().split("x")
            shape = (int(h), int(w))
        except ValueError:
            self.fail(f"{value!r} is not HxW", param, ctx)
        if min(shape) < 1:
            self.fail("kernel dims must be >= 1", param, ctx)
        return shape


class SeqLen(click.ParamType):
    name = "N|generic"

    def convert(self, value, param, ctx):
        if isinstance(value, int) or value == GENERIC_SEQ_LEN:
            return value
        try:
            n = int(value)
        except ValueError:
            self.fail(f"{value!r} is not an integer or 'generic'", param, ctx)
        if n < 1:
            self.fail("sequence length must be >= 1", param, ctx)
        return n


class BitsRange(click.ParamType):
    name = "LO..HI"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            lo, hi = value.split("..")
            lo, hi = int(lo), int(hi)
        except ValueError:
            self.fail(f"{value!r} is not LO..HI", param, ctx)
        if not (1 <= lo <= hi):
            self.fail("need 1 <= LO <= HI", param, ctx)
        return (lo, hi)


def _profile_opt(f):
    return click.option("--profile", default=None,
                        help="built-in name or profile JSON path "
                             "(default: dsp48e2, or DSPPACK_PROFILE)")(f)


def _policy_opts(f):
    f = click.option("--exhaustive-bits", default=20, show_default=True,
                     help="exhaustive sweep when total operand bits fit")(f)
    f = click.option("--samples", default=100_000, show_default=True,
                     help="random trials per cell otherwise")(f)
    f = click.option("--seed", default=20_240_801, show_default=True)(f)
    return f


@click.group()
def main():
    """Pack low-bit multiplications into fixed-width DSP blocks."""


@main.command("pack-search")
@click.option("--wb", required=True, type=int, help="weight bit-width")
@click.option("--ab", required=True, type=int, help="activation bit-width")
@click.option("--kernel", type=KernelShape(), default=(1, 1),
              show_default="1x1", help="kernel shape HxW")
@click.option("--seq-len", type=SeqLen(), default=GENERIC_SEQ_LEN,
              show_default=True)
@click.option("--signedness", type=click.Choice(SIGNEDNESS_MODES),
              default="unsigned", show_default=True)
@click.option("--allow-overpack", is_flag=True)
@click.option("--allow-separation", is_flag=True)
@_profile_opt
@click.option("-o", "--out", default="-", help="choice document (- = stdout)")
def cmd_pack_search(wb, ab, kernel, seq_len, signedness, allow_overpack,
                    allow_separation, profile, out):
    """Find the optimal packing for one bit-width pair."""
    prof = load_profile(profile)
    try:
        choice = table_mod.search_optimal(
            wb, ab, kernel, seq_len, prof,
            allow_overpack=allow_overpack,
            allow_separation=allow_separation,
            signedness=signedness)
    except NoValidConfigError as exc:
        _fail(1, str(exc))
    except ValueError as exc:
        _fail(2, str(exc))
    from .packing import choice_to_entry

    doc = {
        "version": CHOICE_DOC_VERSION,
        "profile": prof.to_dict(),
        "kernel_shape": list(kernel),
        "seq_len_policy": seq_len,
        "signedness": signedness,
        "choice": choice_to_entry(choice),
    }
    _write_json(out, doc, "choice")
    t = choice.t_mul
    t_str = str(t.numerator) if t.denominator == 1 else f"{t.numerator}/{t.denominator}"
    click.echo(f"T_mul = {t_str}  E_g = {choice.e_g}  "
               f"strategy = {choice.strategy}"
               f"{' overpacked' if choice.overpacked else ''}"
               f"{' separated' if choice.separated else ''}", err=True)


@main.command("pack-table")
@click.option("--kernel", type=KernelShape(), required=True)
@click.option("--bits", type=BitsRange(), default=(2, 8),
              show_default="2..8")
@click.option("--seq-len", type=SeqLen(), default=GENERIC_SEQ_LEN,
              show_default=True)
@click.option("--signedness", type=click.Choice(SIGNEDNESS_MODES),
              default="unsigned", show_default=True)
@click.option("--allow-overpack", is_flag=True)
@click.option("--allow-separation", is_flag=True)
@_profile_opt
@_policy_opts
@click.option("-o", "--out", required=True, help="table JSON path")
@click.option("--csv", "csv_out", default=None,
              help="also write the T_mul grid as CSV")
def cmd_pack_table(kernel, bits, seq_len, signedness, allow_overpack,
                   allow_separation, profile, exhaustive_bits, samples, seed,
                   out, csv_out):
    """Build, verify, and serialize a throughput lookup table."""
    prof = load_profile(profile)
    policy = SamplePolicy(exhaustive_bits=exhaustive_bits, samples=samples,
                          seed=seed)
    try:
        table = table_mod.build_table(
            kernel, seq_len, prof,
            allow_overpack=allow_overpack,
            allow_separation=allow_separation,
            signedness=signedness, bits_range=bits, policy=policy)
    except VerificationFailure as exc:
        _fail(1, f"cell failed bit-exactness: {json.dumps(exc.report['choice'])}")
    except ValueError as exc:
        _fail(2, str(exc))
    _write_json(out, table_mod.export_table(table), "lut")
    if csv_out:
        with open(csv_out, "w") as fh:
            fh.write(table_mod.table_to_csv(table))
    click.echo(f"built {len(table.entries)} verified entries -> {out}",
               err=True)


@main.command("pack-verify")
@click.argument("lut_path")
@_policy_opts
@click.option("-o", "--out", default="-", help="report JSON (- = stdout)")
def cmd_pack_verify(lut_path, exhaustive_bits, samples, seed, out):
    """Re-verify every entry of a table; exit 1 on any mismatch."""
    try:
        doc = _read_json(lut_path, "lut")
        table = table_mod.import_table(doc)
    except SchemaError as exc:
        _fail(2, str(exc))
    except ValueError as exc:
        _fail(1, str(exc))
    policy = SamplePolicy(exhaustive_bits=exhaustive_bits, samples=samples,
                          seed=seed)
    results = []
    total = 0
    for cell in sorted(table.entries):
        report = verify_choice(table.entries[cell], table.profile, policy)
        results.append(report)
        total += report["mismatches"]
    doc = {
        "version": REPORT_DOC_VERSION,
        "table": {
            "kernel_shape": list(table.kernel_shape),
            "signedness": table.signedness,
            "profile": table.profile.to_dict(),
        },
        "results": results,
        "total_mismatches": total,
    }
    _write_json(out, doc, "report")
    if total:
        bad = next(r for r in results if r["mismatches"])
        _fail(1, f"{total} mismatches; first counterexample: "
                 f"{json.dumps(bad['counterexample'])}")
    click.echo(f"verified {len(results)} entries, 0 mismatches", err=True)


def _load_tables(paths):
    tables = []
    for p in paths:
        doc = _read_json(p, "lut")
        tables.append(table_mod.import_table(doc))
    return net_mod.TableSet.of(tables)


@main.command("model-ops")
@click.argument("net_path")
@click.option("--bits", "bits_path", required=True,
              help="assignment JSON {layer: {w_b, a_b}}")
@click.option("--lut", "lut_paths", multiple=True, required=True,
              help="table JSON (repeat per kernel shape)")
@click.option("-o", "--out", default="-")
def cmd_model_ops(net_path, bits_path, lut_paths, out):
    """Per-layer multiplication counts and the total DSP operations."""
    try:
        net = net_mod.NetworkSpec.from_dict(_read_json(net_path, "net"))
        bits = net_mod.assignment_from_dict(_read_json(bits_path, "assign"))
        tables = _load_tables(lut_paths)
    except SchemaError as exc:
        _fail(2, str(exc))
    except ValueError as exc:
        _fail(1, str(exc))
    unknown = set(bits) - {l.name for l in net.layers}
    if unknown:
        _fail(2, f"assignment names unknown layers: {sorted(unknown)}")
    try:
        rows = net_mod.op_dsp_breakdown(net, bits, tables)
        total = net_mod.op_dsp(net, bits, tables)
    except net_mod.MissingEntryError as exc:
        _fail(1, str(exc))
    except KeyError as exc:
        _fail(2, f"assignment misses layer {exc}")
    doc = {
        "version": OPS_DOC_VERSION,
        "layers": rows,
        "op_dsp": {"num": total.numerator, "den": total.denominator},
        "op_mul_total": sum(r["op_mul"] for r in rows),
    }
    _write_json(out, doc, "ops")
    for r in rows:
        t = Fraction(r["t_mul"]["num"], r["t_mul"]["den"])
        click.echo(f"{r['name']:>16}  op_mul={r['op_mul']:>12}  "
                   f"bits=({r['w_b']},{r['a_b']})  t_mul={t}", err=True)
    click.echo(f"Op_dsp = {total} (~{float(total):.1f})", err=True)


@main.group()
def cost():
    """Stage cost model: synthesize samples, train the regressor."""


@cost.command("synth")
@click.option("--spec", "spec_path", required=True,
              help="generator spec JSON")
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--out", required=True, help="samples CSV path")
def cmd_cost_synth(spec_path, seed, out):
    """Draw reproducible linear-plus-noise stage samples."""
    try:
        spec = _read_json(spec_path, "gen_spec")
        rows, targets = alloc_mod.synth_samples(spec, seed)
    except SchemaError as exc:
        _fail(2, str(exc))
    except ValueError as exc:
        _fail(2, str(exc))
    with open(out, "w") as fh:
        fh.write(alloc_mod.samples_to_csv(rows, targets))
    click.echo(f"wrote {len(rows)} samples -> {out}", err=True)


@cost.command("train")
@click.argument("samples_path")
@click.option("--alpha", type=float, default=None,
              help="fixed noise precision (with --lam: closed-form mode)")
@click.option("--lam", type=float, default=None,
              help="fixed weight precision")
@click.option("-o", "--out", required=True, help="model JSON path")
def cmd_cost_train(samples_path, alpha, lam, out):
    """Fit the three per-target regressors from a sample CSV."""
    if (alpha is None) != (lam is None):
        _fail(2, "--alpha and --lam must be given together")
    try:
        with open(samples_path) as fh:
            rows, targets = alloc_mod.samples_from_csv(fh.read())
    except (OSError, ValueError) as exc:
        _fail(2, f"cannot read samples: {exc}")
    missing = set(ridge_mod.TARGETS) - set(targets)
    if missing:
        _fail(2, f"samples missing target columns: {sorted(missing)}")
    try:
        pred = ridge_mod.StagePredictor.fit(rows, targets, alpha=alpha,
                                            lambda_=lam)
    except ValueError as exc:
        _fail(1, str(exc))
    _write_json(out, pred.to_dict(), "model")
    click.echo(f"trained on {len(rows)} samples -> {out}", err=True)


def _build_contexts(net, bits, tables):
    contexts = []
    for layer in net.layers:
        w_b, a_b = bits[layer.name]
        dsp = net_mod.layer_op_dsp(layer, bits, tables)
        shape = (1, 1) if layer.op_kind == "fully_connected" else layer.kernel_shape
        contexts.append(alloc_mod.StageContext(
            name=layer.name,
            op_mul=net_mod.op_mul(layer),
            kernel_area=layer.k_h * layer.k_w,
            w_b=w_b, a_b=a_b,
            op_dsp=dsp,
            c_out=layer.c_out,
            packing_ref=f"{shape[0]}x{shape[1]}:w{w_b}a{a_b}",
        ))
    return contexts


def _alloc_common(f):
    f = click.argument("net_path")(f)
    f = click.option("--bits", "bits_path", required=True)(f)
    f = click.option("--lut", "lut_paths", multiple=True, required=True)(f)
    f = click.option("--cost", "model_path", required=True,
                     help="trained cost model JSON")(f)
    f = click.option("--dsp-budget", type=int, required=True)(f)
    f = click.option("--lut-budget", type=int, required=True)(f)
    f = click.option("--lut-replacement", is_flag=True,
                     help="allow LUT-equivalent lanes")(f)
    f = click.option("--lut-unit", type=int, default=alloc_mod.DEFAULT_LUT_UNIT,
                     show_default=True, help="LUT budget quantization")(f)
    f = click.option("--pf-cap", type=int, default=alloc_mod.DEFAULT_PF_CAP,
                     show_default=True)(f)
    f = click.option("-o", "--out", default="-")(f)
    return f


def _run_alloc(solver, net_path, bits_path, lut_paths, model_path, dsp_budget,
               lut_budget, lut_replacement, lut_unit, pf_cap, out):
    try:
        net = net_mod.NetworkSpec.from_dict(_read_json(net_path, "net"))
        bits = net_mod.assignment_from_dict(_read_json(bits_path, "assign"))
        tables = _load_tables(lut_paths)
        pred = ridge_mod.StagePredictor.from_dict(_read_json(model_path, "model"))
    except SchemaError as exc:
        _fail(2, str(exc))
    except ValueError as exc:
        _fail(1, str(exc))
    try:
        contexts = _build_contexts(net, bits, tables)
    except (net_mod.MissingEntryError, KeyError) as exc:
        _fail(1, str(exc))
    try:
        result = solver(contexts, pred, dsp_budget, lut_budget,
                        pf_cap=pf_cap, lut_unit=lut_unit,
                        lut_replacement=lut_replacement)
    except alloc_mod.SearchSpaceTooLarge as exc:
        _fail(1, str(exc))
    _write_json(out, result.to_dict(), "plan")
    if not result.feasible:
        _fail(1, f"infeasible: {result.reason}")
    lat = result.latency
    click.echo(f"Lat = {lat} (~{float(lat):.1f} cycles)  "
               f"DSP {result.total_dsp}/{dsp_budget}  "
               f"LUT {result.total_lut}/{lut_budget}", err=True)


@main.group()
def alloc():
    """Pipeline resource allocation."""


@alloc.command("run")
@_alloc_common
def cmd_alloc_run(**kw):
    """Dynamic-programming allocation."""
    _run_alloc(alloc_mod.dp_allocate, **kw)


@alloc.command("brute")
@_alloc_common
def cmd_alloc_brute(**kw):
    """Exhaustive oracle (small instances)."""
    _run_alloc(alloc_mod.brute_force_allocate, **kw)


if __name__ == "__main__":
    main()
