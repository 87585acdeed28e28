"""Pipeline resource allocation by dynamic programming.

Every network layer becomes one pipeline stage with a parallel factor (DSP
lanes, optionally LUT-equivalent lanes); stage latency is its DSP-operation
count divided by the total lanes, pipeline latency is the worst stage.  A
three-dimensional table Lat[stage][dsp budget][lut budget] is filled
bottom-up: a stage configuration is admitted only when it strictly improves
the cell (C1), fits the remaining budgets (C2), and keeps positive timing
slack (C3).  Budget cells start at an infinity sentinel, so never-updated
cells mean infeasible.

A brute-force enumerator over the identical stage options serves as the
test oracle on small instances.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ridge import FEATURES, StageEstimate, StagePredictor, stage_features

PLAN_SCHEMA_VERSION = 1
GEN_SPEC_VERSION = 1

DEFAULT_LUT_UNIT = 500
DEFAULT_PF_CAP = 512


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class StageContext:
    """What the allocator needs to know about one stage."""

    name: str
    op_mul: int
    kernel_area: int
    w_b: int
    a_b: int
    op_dsp: Fraction
    c_out: int = 1
    packing_ref: str = ""


@dataclass(frozen=True)
class StageConfig:
    stage: int
    pf_dsp: int
    pf_lut: int
    w_b: int
    a_b: int
    packing_ref: str = ""

    def __post_init__(self):
        if self.pf_dsp + self.pf_lut < 1:
            raise ValueError("a stage needs at least one lane")


@dataclass(frozen=True)
class _Option:
    config: StageConfig
    estimate: StageEstimate
    latency: Fraction
    lut_units: int


@dataclass
class AllocationResult:
    feasible: bool
    latency: Fraction | None
    stages: list  # [(StageConfig, StageEstimate)]
    r_dsp_max: int
    r_lut_max: int
    lut_unit: int
    reason: str | None = None

    @property
    def total_dsp(self) -> int:
        return sum(e.r_dsp for _, e in self.stages)

    @property
    def total_lut(self) -> int:
        return sum(e.r_lut for _, e in self.stages)

    def to_dict(self) -> dict:
        lat = None
        if self.latency is not None:
            lat = {"num": self.latency.numerator, "den": self.latency.denominator}
        return {
            "version": PLAN_SCHEMA_VERSION,
            "feasible": self.feasible,
            "latency": lat,
            "stages": [
                {
                    "stage": c.stage,
                    "pf_dsp": c.pf_dsp,
                    "pf_lut": c.pf_lut,
                    "w_b": c.w_b,
                    "a_b": c.a_b,
                    "packing_ref": c.packing_ref,
                    "r_dsp": e.r_dsp,
                    "r_lut": e.r_lut,
                    "t_wns": e.t_wns,
                }
                for c, e in self.stages
            ],
            "totals": {"r_dsp": self.total_dsp, "r_lut": self.total_lut},
            "budgets": {"r_dsp_max": self.r_dsp_max,
                        "r_lut_max": self.r_lut_max,
                        "lut_unit": self.lut_unit},
            "reason": self.reason,
        }


def pf_candidates(cap: int, c_out: int = 1) -> list[int]:
    """Parallel factors: powers of two plus channel-tiling multiples, capped."""
    vals = set()
    pf = 1
    while pf <= cap:
        vals.add(pf)
        pf *= 2
    if c_out >= 1:
        mult = c_out
        while mult <= cap:
            vals.add(mult)
            mult += c_out
    return sorted(vals)


def _stage_options(ctx: StageContext, stage_idx: int, predictor: StagePredictor,
                   pf_cap: int, lut_unit: int, lut_replacement: bool,
                   r_dsp_max: int, lut_units_max: int) -> list[_Option]:
    """Enumerate the feasible-by-themselves configurations of one stage.

    C3 (positive slack) filters here; C2 only prunes options that could
    never fit even the full budget.
    """
    pf_dsp_domain = pf_candidates(pf_cap, ctx.c_out)
    pf_lut_domain = [0]
    if lut_replacement:
        pf_lut_domain += pf_candidates(pf_cap, ctx.c_out)
    options = []
    for pf_dsp in [0] + pf_dsp_domain:
        for pf_lut in pf_lut_domain:
            if pf_dsp + pf_lut < 1:
                continue
            if pf_dsp == 0 and not lut_replacement:
                continue
            feats = stage_features(pf_dsp, pf_lut, ctx.w_b, ctx.a_b,
                                   ctx.op_mul, ctx.kernel_area)
            est = predictor.predict(feats)
            if est.t_wns <= 0.0:
                continue  # C3
            # a DSP lane is a DSP: the estimate can exceed pf (overhead
            # logic mapped to DSPs) but never undercut it
            est = StageEstimate(r_dsp=max(est.r_dsp, pf_dsp),
                                r_lut=est.r_lut, t_wns=est.t_wns)
            lut_units = -(-est.r_lut // lut_unit) if est.r_lut else 0
            if est.r_dsp > r_dsp_max or lut_units > lut_units_max:
                continue
            cfg = StageConfig(stage=stage_idx, pf_dsp=pf_dsp, pf_lut=pf_lut,
                              w_b=ctx.w_b, a_b=ctx.a_b,
                              packing_ref=ctx.packing_ref)
            lat = ctx.op_dsp / (pf_dsp + pf_lut)
            options.append(_Option(cfg, est, lat, lut_units))
    options.sort(key=lambda o: (o.latency, o.estimate.r_dsp, o.lut_units,
                                o.config.pf_dsp, o.config.pf_lut))
    return options


def _infeasible(r_dsp_max, r_lut_max, lut_unit, reason):
    return AllocationResult(False, None, [], r_dsp_max, r_lut_max, lut_unit,
                            reason=reason)


def check_plan(result: AllocationResult, contexts) -> None:
    """Re-verify a plan against the problem constraints, independent of the
    DP table that produced it."""
    if not result.feasible:
        return
    assert len(result.stages) == len(contexts)
    assert result.total_dsp <= result.r_dsp_max, "DSP budget violated"
    lut_quantized = sum(-(-e.r_lut // result.lut_unit) * result.lut_unit
                        for _, e in result.stages)
    assert lut_quantized <= result.r_lut_max, "LUT budget violated"
    assert all(e.t_wns > 0 for _, e in result.stages), "timing violated"
    lat = max(ctx.op_dsp / (c.pf_dsp + c.pf_lut)
              for ctx, (c, _) in zip(contexts, result.stages))
    assert lat == result.latency, "latency inconsistent with configs"


def dp_allocate(contexts, predictor: StagePredictor, r_dsp_max: int,
                r_lut_max: int, pf_cap: int = DEFAULT_PF_CAP,
                lut_unit: int = DEFAULT_LUT_UNIT,
                lut_replacement: bool = False) -> AllocationResult:
    """Optimal resource allocation over the quantized budget grid.

    Returns the plan achieving the minimal pipeline latency within the
    budgets; among equal-latency plans, fewer total DSPs, then fewer LUTs.
    """
    if r_dsp_max < 0 or r_lut_max < 0:
        raise ValueError("budgets must be non-negative")
    contexts = list(contexts)
    if not contexts:
        raise ValueError("need at least one stage")
    n_lut_units = r_lut_max // lut_unit
    per_stage = [
        _stage_options(ctx, i, predictor, pf_cap, lut_unit, lut_replacement,
                       r_dsp_max, n_lut_units)
        for i, ctx in enumerate(contexts)
    ]
    for i, opts in enumerate(per_stage):
        if not opts:
            return _infeasible(
                r_dsp_max, r_lut_max, lut_unit,
                f"stage {contexts[i].name}: no configuration satisfies "
                f"resources and timing")

    width = (r_dsp_max + 1) * (n_lut_units + 1)

    def idx(rd, ru):
        return rd * (n_lut_units + 1) + ru

    prev = [Fraction(0)] * width
    choice_tables = []
    for options in per_stage:
        cur = [None] * width
        back = [-1] * width
        for oi, opt in enumerate(options):
            need_d, need_u = opt.estimate.r_dsp, opt.lut_units
            for rd in range(need_d, r_dsp_max + 1):
                for ru in range(need_u, n_lut_units + 1):
                    p = prev[idx(rd - need_d, ru - need_u)]
                    if p is None:
                        continue
                    cand = opt.latency if opt.latency > p else p
                    cell = idx(rd, ru)
                    if cur[cell] is None or cand < cur[cell]:
                        cur[cell] = cand
                        back[cell] = oi
        choice_tables.append(back)
        prev = cur

    final = prev[idx(r_dsp_max, n_lut_units)]
    if final is None:
        return _infeasible(r_dsp_max, r_lut_max, lut_unit,
                           "budgets admit no complete pipeline")

    # tie-break: smallest budgets that still realize the optimum, which by
    # construction equal the smallest achievable totals
    rd_star = next(rd for rd in range(r_dsp_max + 1)
                   if prev[idx(rd, n_lut_units)] == final)
    ru_star = next(ru for ru in range(n_lut_units + 1)
                   if prev[idx(rd_star, ru)] == final)

    stages = []
    rd, ru = rd_star, ru_star
    for l in range(len(contexts) - 1, -1, -1):
        oi = choice_tables[l][idx(rd, ru)]
        assert oi >= 0
        opt = per_stage[l][oi]
        stages.append((opt.config, opt.estimate))
        rd -= opt.estimate.r_dsp
        ru -= opt.lut_units
    stages.reverse()

    result = AllocationResult(True, final, stages, r_dsp_max, r_lut_max,
                              lut_unit)
    check_plan(result, contexts)
    return result


def brute_force_allocate(contexts, predictor: StagePredictor, r_dsp_max: int,
                         r_lut_max: int, pf_cap: int = DEFAULT_PF_CAP,
                         lut_unit: int = DEFAULT_LUT_UNIT,
                         lut_replacement: bool = False,
                         space_cap: int = 10_000_000) -> AllocationResult:
    """Exhaustive oracle over the same options, small instances only."""
    contexts = list(contexts)
    n_lut_units = r_lut_max // lut_unit
    per_stage = [
        _stage_options(ctx, i, predictor, pf_cap, lut_unit, lut_replacement,
                       r_dsp_max, n_lut_units)
        for i, ctx in enumerate(contexts)
    ]
    for i, opts in enumerate(per_stage):
        if not opts:
            return _infeasible(r_dsp_max, r_lut_max, lut_unit,
                               f"stage {contexts[i].name}: no configuration "
                               f"satisfies resources and timing")
    space = 1
    for opts in per_stage:
        space *= len(opts)
        if space > space_cap:
            raise SearchSpaceTooLarge(f"{space} combinations exceed the cap")

    best_key = None
    best = None
    for combo in itertools.product(*per_stage):
        total_d = sum(o.estimate.r_dsp for o in combo)
        total_u = sum(o.lut_units for o in combo)
        if total_d > r_dsp_max or total_u > n_lut_units:
            continue
        lat = max(o.latency for o in combo)
        key = (lat, total_d, total_u)
        if best_key is None or key < best_key:
            best_key = key
            best = combo
    if best is None:
        return _infeasible(r_dsp_max, r_lut_max, lut_unit,
                           "budgets admit no complete pipeline")
    result = AllocationResult(
        True, best_key[0], [(o.config, o.estimate) for o in best],
        r_dsp_max, r_lut_max, lut_unit)
    check_plan(result, contexts)
    return result


def synth_samples(gen_spec: dict, seed: int):
    """Draw reproducible stage samples from a linear-plus-noise generator.

    Stands in for synthesizing sampled hardware configurations: features are
    drawn uniformly from the generator's ranges, each target is a linear
    combination of features plus Gaussian noise.
    Returns (feature_rows, targets dict).
    """
    from .schemas import validate_document

    validate_document(gen_spec, "gen_spec")
    if gen_spec["version"] != GEN_SPEC_VERSION:
        raise ValueError(f"unsupported generator version {gen_spec['version']}")
    rng = np.random.default_rng(seed)
    n = gen_spec["n_samples"]
    ranges = gen_spec["ranges"]

    def draw(name, default_lo, default_hi):
        lo, hi = ranges.get(name, [default_lo, default_hi])
        return rng.integers(lo, hi + 1, size=n)

    pf_dsp = draw("pf_dsp", 1, 64)
    pf_lut = draw("pf_lut", 0, 0)
    w_b = draw("w_b", 2, 8)
    a_b = draw("a_b", 2, 8)
    op_mul = draw("op_mul", 1000, 1_000_000)
    areas = ranges.get("kernel_area", [1, 9])
    kernel_area = rng.choice(np.asarray(areas, dtype=np.int64), size=n)

    rows = [
        stage_features(pf_dsp[i], pf_lut[i], w_b[i], a_b[i], op_mul[i],
                       kernel_area[i])
        for i in range(n)
    ]
    X = np.asarray(rows, dtype=float)
    targets = {}
    for tname, tspec in gen_spec["targets"].items():
        coefs = np.asarray([float(tspec.get("coef", {}).get(f, 0.0))
                            for f in FEATURES])
        y = X @ coefs
        noise = float(tspec.get("noise_std", 0.0))
        if noise > 0:
            y = y + rng.normal(0.0, noise, size=n)
        targets[tname] = y.tolist()
    return rows, targets


def samples_to_csv(rows, targets) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(FEATURES) + list(targets))
    for i, row in enumerate(rows):
        writer.writerow([repr(v) for v in row]
                        + [repr(targets[t][i]) for t in targets])
    return out.getvalue()


def samples_from_csv(text: str):
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[:len(FEATURES)] != list(FEATURES):
        raise ValueError(f"sample file features do not match {FEATURE_HEADER}")
    target_names = header[len(FEATURES):]
    rows, targets = [], {t: [] for t in target_names}
    for rec in reader:
        rows.append([float(v) for v in rec[:len(FEATURES)]])
        for t, v in zip(target_names, rec[len(FEATURES):]):
            targets[t].append(float(v))
    return rows, targets


FEATURE_HEADER = ",".join(FEATURES)
