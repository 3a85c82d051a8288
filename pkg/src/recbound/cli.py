"""Command-line front end: `recbound analyze|sweep|selftest`.

Reports are deterministic structured text (no timestamps, shortest
round-trip float formatting); sample and aggregate CSVs use fixed headers.
Identical configs produce bitwise-identical outputs regardless of `--jobs`.

Exit codes: 0 success, 1 selftest failure, 2 config/parse error, 3 numeric
failure (pole, overflow, exhausted source), 4 refused (a hypothesis probe
failed, e.g. input partial sums not evidently bounded).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import factpoly, jordan
from .config import (
    ExperimentConfig,
    build_source,
    load_config,
    substitute_parameter,
    validate_config,
)
from .errors import (
    ConfigError,
    OverflowGuardError,
    PhaseEvalError,
    PhaseSyntaxError,
    PoleError,
    RecboundError,
    RefusedError,
    SourceExhaustedError,
)
from .expsum import (
    Certificate,
    Verdict,
    abel_identity_residual,
    certify_bounded,
    certify_unbounded,
    check_kl_hypothesis,
    kusmin_landau_bound,
    partial_sums,
    tail_sum_bound,
    unit_phase,
)
from .numerics import format_float, unit_linear
from .phasefn import parse_phase, phase_source
from .scalar import (
    Declarations,
    Regime,
    ScalarEquation,
    classify_scalar,
    simulate_scalar,
)

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_REFUSED = 4

_CONFIG_ERRORS = (ConfigError, PhaseSyntaxError)
_NUMERIC_ERRORS = (PhaseEvalError, PoleError, OverflowGuardError, SourceExhaustedError)

AGGREGATE_HEADER = "index,parameter,value,status,verdict,sup_abs,final_abs,growth_exponent,bound_value,detail"
SAMPLES_HEADER = "n,abs,re,im"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, complex):
        return f"{format_float(value.real)} {format_float(value.imag)}"
    if isinstance(value, Verdict):
        return value.value
    return str(value)


@dataclass
class AnalysisResult:
    lines: list[tuple[str, str]]
    samples: Optional[np.ndarray]
    summary: dict = field(default_factory=dict)
    figure_title: str = ""
    figure_bound: Optional[float] = None
    samples_label: str = "|S(n)|"


def _emit_certificate(lines: list, prefix: str, cert: Certificate) -> None:
    lines.append((f"{prefix}.verdict", cert.verdict.value))
    lines.append((f"{prefix}.bound_value", _fmt(cert.bound_value)))
    for key, val in cert.hypothesis_report.items():
        if isinstance(val, dict):
            for k2, v2 in val.items():
                lines.append((f"{prefix}.{key}.{k2}", _fmt(v2)))
        else:
            lines.append((f"{prefix}.{key}", _fmt(val)))


def _resolve_majorant(spec, horizon: int) -> Optional[float]:
    """Turn the config's tail-majorant declaration into a tail-sum bound.

    Numbers pass through (the caller already summed the tail); a closed form
    is integrated from horizon-1, covering |D2 f(n)| for n >= horizon.
    """
    if spec is None:
        return None
    if isinstance(spec, (int, float)):
        return float(spec)
    return tail_sum_bound(spec["expr"], max(1, horizon - 1),
                          monotone_decreasing=bool(spec["monotone_decreasing"]))


def _analyze_expsum(cfg: ExperimentConfig) -> AnalysisResult:
    phase_text = cfg.payload["phase"]
    expr = parse_phase(phase_text)
    horizon = cfg.horizon
    analysis = partial_sums(expr, horizon)
    tail = _resolve_majorant(cfg.payload.get("tail_majorant"), horizon)
    declared_psi = cfg.payload.get("declared_psi")
    unbounded_verdicts = (Verdict.UNBOUNDED_CERTIFIED, Verdict.UNBOUNDED_EVIDENCE)
    bounded_verdicts = (Verdict.BOUNDED_CERTIFIED, Verdict.BOUNDED_EVIDENCE)
    cert_b = None
    cert_u = None
    primary = None
    # a declared integer slope limit is a request for the unbounded analysis;
    # run it first so horizon-limited bounded *evidence* cannot shadow it
    if declared_psi is not None:
        cert_u = certify_unbounded(expr, horizon, declared_psi=declared_psi)
        if cert_u.verdict in unbounded_verdicts:
            primary = cert_u
    if primary is None:
        cert_b = certify_bounded(expr, horizon, tail_majorant=tail)
        if cert_b.verdict in bounded_verdicts:
            primary = cert_b
    if primary is None and cert_u is None:
        cert_u = certify_unbounded(expr, horizon, declared_psi=declared_psi)
        if cert_u.verdict in unbounded_verdicts:
            primary = cert_u
    if primary is None:
        primary = cert_u if cert_b is None else cert_b

    lines: list[tuple[str, str]] = [
        ("kind", "expsum"),
        ("phase", phase_text),
        ("horizon", str(horizon)),
        ("tolerance", _fmt(cfg.tolerance)),
        ("verdict", primary.verdict.value),
        ("certificate_class", "certified" if "Certified" in primary.verdict.value else
         ("evidence" if "Evidence" in primary.verdict.value else "inconclusive")),
        ("sup_abs", _fmt(analysis.sup_abs)),
        ("sup_at", str(analysis.sup_at)),
        ("final_abs", _fmt(analysis.final_abs)),
        ("growth_exponent", _fmt(analysis.growth.exponent)),
        ("growth_coefficient", _fmt(analysis.growth.coefficient)),
        ("growth_rms_residual", _fmt(analysis.growth.rms_residual)),
        ("growth_reliable", _fmt(analysis.growth.reliable)),
        ("psi_estimate", _fmt(analysis.psi_estimate)),
        ("samples_stored", str(len(analysis.samples))),
    ]
    if cert_b is not None:
        _emit_certificate(lines, "bounded_check", cert_b)
    if cert_u is not None:
        _emit_certificate(lines, "unbounded_check", cert_u)
    theta = cfg.payload.get("kl_theta")
    if theta is not None:
        chk = check_kl_hypothesis(expr, horizon, float(theta))
        lines.append(("kl_hypothesis.theta", _fmt(float(theta))))
        lines.append(("kl_hypothesis.holds", _fmt(chk.holds)))
        lines.append(("kl_hypothesis.violation_at", _fmt(chk.violation_at)))
        if chk.holds:
            lines.append(("kl_hypothesis.envelope_bound", _fmt(kusmin_landau_bound(float(theta)))))
    summary = {
        "verdict": primary.verdict.value,
        "sup_abs": analysis.sup_abs,
        "final_abs": analysis.final_abs,
        "growth_exponent": analysis.growth.exponent,
        "bound_value": primary.bound_value,
    }
    return AnalysisResult(lines, analysis.samples, summary,
                          figure_title=f"expsum: {phase_text} (N={horizon})",
                          figure_bound=primary.bound_value)


def _analyze_scalar(cfg: ExperimentConfig) -> AnalysisResult:
    pay = cfg.payload
    y = build_source(pay["input"], "scalar.input")
    x1 = pay.get("x1", 0.0)
    x1 = complex(x1[0], x1[1]) if isinstance(x1, list) else complex(float(x1), 0.0)
    eq = ScalarEquation(float(pay["rho"]), float(pay["phi"]), x1, y)
    tail = _resolve_majorant(pay.get("tail_majorant"), cfg.horizon)
    decl = Declarations(tail_majorant=tail, declared_psi=pay.get("declared_psi"))
    cls = classify_scalar(eq, cfg.horizon, tol=cfg.tolerance, declarations=decl)

    lines: list[tuple[str, str]] = [
        ("kind", "scalar"),
        ("rho", _fmt(eq.rho)),
        ("phi", _fmt(eq.phi)),
        ("x1", _fmt(eq.x1)),
        ("input", y.describe()),
        ("horizon", str(cfg.horizon)),
        ("tolerance", _fmt(cfg.tolerance)),
        ("regime", cls.regime.value),
        ("input_sup", _fmt(cls.y_sup)),
        ("input_growth_exponent", _fmt(cls.y_growth.exponent)),
    ]
    verdict = cls.regime.value
    if cls.regime is Regime.UNIQUE_BOUNDED:
        lines.append(("required_x1", _fmt(cls.required_x1)))
        sim_eq = ScalarEquation(eq.rho, eq.phi, cls.required_x1, y)
        traj = simulate_scalar(sim_eq, min(cfg.horizon, 1000))
        lines.append(("trajectory_note", "simulated from the required initial value"))
    else:
        traj = simulate_scalar(eq, cfg.horizon)
    if cls.certificate is not None:
        verdict = cls.certificate.verdict.value
        _emit_certificate(lines, "certificate", cls.certificate)
    if cls.criterion_sup is not None:
        lines.append(("criterion_sup", _fmt(cls.criterion_sup)))
    lines.append(("trajectory_horizon", str(traj.horizon)))
    lines.append(("trajectory_sup", _fmt(traj.sup_abs)))
    lines.append(("trajectory_sup_at", str(traj.sup_at)))
    lines.append(("trajectory_growth_exponent", _fmt(traj.growth.exponent)))
    lines.append(("trajectory_growth_reliable", _fmt(traj.growth.reliable)))
    for note in cls.notes:
        lines.append(("note", note))
    bound = cls.certificate.bound_value if cls.certificate else None
    summary = {
        "verdict": verdict,
        "sup_abs": traj.sup_abs,
        "final_abs": abs(traj.final),
        "growth_exponent": traj.growth.exponent,
        "bound_value": bound,
    }
    return AnalysisResult(lines, traj.samples, summary,
                          figure_title=f"scalar: rho={_fmt(eq.rho)} phi={_fmt(eq.phi)}",
                          figure_bound=bound, samples_label="|x(n)|")


def _analyze_jordan_cell(cfg: ExperimentConfig) -> AnalysisResult:
    pay = cfg.payload
    order = int(pay["order"])
    ytilde = tuple(
        build_source(spec, f"jordan-cell.ytilde[{i}]") for i, spec in enumerate(pay["ytilde"])
    )
    problem = jordan.CriticalCellProblem(float(pay["phi"]), order, ytilde)
    probe_horizon = int(pay.get("probe_horizon", min(cfg.horizon, 10**6)))
    bounds = jordan.measure_input_bounds(problem, probe_horizon)
    result = jordan.critical_init_values(
        problem, cfg.tolerance, probe_horizon=probe_horizon, input_bounds=bounds
    )
    x1_first = pay.get("x1_first", 0.0)
    x1_first = complex(x1_first[0], x1_first[1]) if isinstance(x1_first, list) else complex(x1_first)
    state = jordan.bounded_initial_state(problem, result, x1_first)
    trajs = jordan.simulate_block(problem.block(state), cfg.horizon)

    lines: list[tuple[str, str]] = [
        ("kind", "jordan-cell"),
        ("phi", _fmt(problem.phi)),
        ("order", str(order)),
        ("horizon", str(cfg.horizon)),
        ("tolerance", _fmt(cfg.tolerance)),
        ("probe_horizon", str(probe_horizon)),
    ]
    for m in range(1, order + 1):
        lines.append((f"input_row_{m}", ytilde[m - 1].describe()))
        lines.append((f"input_row_{m}.partial_sum_sup", _fmt(bounds.c_values[m - 1])))
    for i, val in enumerate(result.values):
        lines.append((f"init_row_{i + 2}", _fmt(val)))
    for entry in result.truncation:
        key = f"truncation.m{entry.row_m}.r{entry.series_r}"
        lines.append((f"{key}.terms", str(entry.terms)))
        lines.append((f"{key}.tail_bound", _fmt(entry.tail_bound)))
        lines.append((f"{key}.c_used", _fmt(entry.c_used)))
    sup_overall = 0.0
    for i, traj in enumerate(trajs):
        lines.append((f"row_{i + 1}.sup", _fmt(traj.sup_abs)))
        lines.append((f"row_{i + 1}.growth_exponent", _fmt(traj.growth.exponent)))
        sup_overall = max(sup_overall, traj.sup_abs)
    verdict = "BoundedEvidence"
    if any(t.growth.reliable and t.growth.exponent > 0.2 for t in trajs):
        verdict = "Inconclusive"
    lines.append(("verdict", verdict))
    lines.append(("certificate_class", "evidence"))
    lines.append(("verdict_note",
                  "constructed initial values; boundedness observed over the horizon"))
    if pay.get("perturb_delta") is not None:
        delta = pay["perturb_delta"]
        delta = complex(delta[0], delta[1]) if isinstance(delta, list) else complex(delta)
        row = int(pay.get("perturb_row", order))
        pert_h = int(pay.get("perturb_horizon", min(cfg.horizon, 10**5)))
        probe = jordan.perturbation_probe(problem, state, delta, row, pert_h)
        lines.append(("perturbation.delta", _fmt(delta)))
        lines.append(("perturbation.row", str(row)))
        lines.append(("perturbation.horizon", str(pert_h)))
        lines.append(("perturbation.row1_final_ratio", _fmt(probe.row1_final_ratio)))
        lines.append(("perturbation.row1_growth_exponent",
                      _fmt(probe.perturbed[0].growth.exponent)))
    summary = {
        "verdict": verdict,
        "sup_abs": sup_overall,
        "final_abs": abs(trajs[0].final),
        "growth_exponent": trajs[0].growth.exponent,
        "bound_value": None,
    }
    return AnalysisResult(lines, trajs[0].samples, summary,
                          figure_title=f"jordan-cell: order {order}, phi={_fmt(problem.phi)}",
                          samples_label="|x_1(n)|")


def _analyze_jordan_system(cfg: ExperimentConfig) -> AnalysisResult:
    pay = cfg.payload
    blocks = []
    for i, blk in enumerate(pay["blocks"]):
        inputs = tuple(
            build_source(spec, f"blocks[{i}].inputs[{j}]") for j, spec in enumerate(blk["inputs"])
        )
        init = blk.get("x1")
        if init is not None:
            init = tuple(complex(v[0], v[1]) if isinstance(v, list) else complex(float(v), 0)
                         for v in init)
        blocks.append(jordan.JordanBlock(float(blk["rho"]), float(blk["phi"]),
                                         int(blk["order"]), inputs, init or ()))
    transform = None
    if pay.get("transform") is not None:
        transform = np.array(
            [[complex(v[0], v[1]) if isinstance(v, list) else complex(float(v), 0) for v in row]
             for row in pay["transform"]],
            dtype=np.complex128,
        )
    system = jordan.JordanSystem(tuple(blocks), transform)
    report = jordan.classify_spectrum(system)

    lines: list[tuple[str, str]] = [
        ("kind", "jordan-system"),
        ("dimension", str(system.dimension)),
        ("horizon", str(cfg.horizon)),
        ("tolerance", _fmt(cfg.tolerance)),
        ("verdict", report.verdict.value),
    ]
    if transform is not None:
        cond = jordan.transform_condition(system)
        lines.append(("transform_condition", _fmt(cond)))
        lines.append(("transform_note",
                      "boundedness verdicts transfer both ways; norm distortion factor as shown"))
    for blk_report, blk in zip(report.blocks, system.blocks):
        key = f"block_{blk_report.index}"
        lines.append((f"{key}.rho", _fmt(blk_report.rho)))
        lines.append((f"{key}.phi", _fmt(blk_report.phi)))
        lines.append((f"{key}.order", str(blk_report.order)))
        lines.append((f"{key}.regime", blk_report.regime.value))
        if blk_report.regime is Regime.UNIQUE_BOUNDED:
            inits = jordan.required_init_expanding(blk, cfg.tolerance)
            for j, val in enumerate(inits):
                lines.append((f"{key}.required_x1_row_{j + 1}", _fmt(val)))
        elif blk_report.regime is Regime.CRITICAL and blk_report.order >= 2:
            lines.append((f"{key}.note",
                          "critical cell of order >= 2: run a jordan-cell analysis "
                          "with unscaled row inputs for constructive initial values"))
    summary = {
        "verdict": report.verdict.value,
        "sup_abs": None,
        "final_abs": None,
        "growth_exponent": None,
        "bound_value": None,
    }
    return AnalysisResult(lines, None, summary,
                          figure_title=f"jordan-system: {len(blocks)} block(s)")


_RUNNERS = {
    "expsum": _analyze_expsum,
    "scalar": _analyze_scalar,
    "jordan-cell": _analyze_jordan_cell,
    "jordan-system": _analyze_jordan_system,
}


def run_analysis(cfg: ExperimentConfig) -> AnalysisResult:
    return _RUNNERS[cfg.kind](cfg)


def render_report(result: AnalysisResult) -> str:
    width = max((len(k) for k, _ in result.lines), default=0)
    body = "\n".join(f"{k.ljust(width)}  {v}" for k, v in result.lines)
    return f"recbound report\n{'=' * 15}\n{body}\n"


def render_samples_csv(samples: np.ndarray) -> str:
    rows = [SAMPLES_HEADER]
    for n, a, re, im in samples:
        rows.append(f"{int(n)},{format_float(a)},{format_float(re)},{format_float(im)}")
    return "\n".join(rows) + "\n"


def _apply_overrides(doc: dict, args: argparse.Namespace) -> dict:
    doc = dict(doc)
    if getattr(args, "horizon", None) is not None:
        doc["horizon"] = args.horizon
    if getattr(args, "tol", None) is not None:
        doc["tolerance"] = args.tol
    if getattr(args, "plot", False):
        doc["plot"] = True
    return doc


def _out_paths(cfg: ExperimentConfig, config_path: str, out_dir: str) -> dict:
    stem = os.path.splitext(os.path.basename(config_path))[0]
    names = {
        "report": cfg.outputs.report or f"{stem}.report.txt",
        "samples": cfg.outputs.samples or f"{stem}.samples.csv",
        "figure": cfg.outputs.figure or f"{stem}.png",
        "aggregate": cfg.outputs.aggregate or f"{stem}.sweep.csv",
    }
    return {k: os.path.join(out_dir, v) for k, v in names.items()}


def _classify_error(exc: Exception) -> int:
    if isinstance(exc, _CONFIG_ERRORS):
        return EXIT_CONFIG
    if isinstance(exc, _NUMERIC_ERRORS):
        return EXIT_NUMERIC
    if isinstance(exc, RefusedError):
        return EXIT_REFUSED
    raise exc


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        base = load_config(args.config)
        cfg = validate_config(_apply_overrides(base.raw, args))
        result = run_analysis(cfg)
    except RecboundError as exc:
        code = _classify_error(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    os.makedirs(args.out, exist_ok=True)
    paths = _out_paths(cfg, args.config, args.out)
    with open(paths["report"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_report(result))
    written = [paths["report"]]
    if result.samples is not None:
        with open(paths["samples"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render_samples_csv(result.samples))
        written.append(paths["samples"])
    if cfg.plot and result.samples is not None:
        from . import plots

        plots.render_envelope_figure(result.samples, paths["figure"],
                                     title=result.figure_title,
                                     bound=result.figure_bound,
                                     ylabel=result.samples_label)
        written.append(paths["figure"])
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _csv_cell(value) -> str:
    text = _fmt(value)
    return text.replace(",", ";").replace("\n", " ")


def _sweep_point(base_doc: dict, spec, value: float):
    """Run one grid point; returns (status, summary dict, detail)."""
    try:
        doc = substitute_parameter(base_doc, spec.parameter, value)
        doc.pop("sweep", None)
        doc.pop("plot", None)
        cfg = validate_config(doc)
        result = run_analysis(cfg)
        return EXIT_OK, result.summary, ""
    except RecboundError as exc:
        return _classify_error(exc), {}, str(exc)


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        base = load_config(args.config)
        cfg = validate_config(_apply_overrides(base.raw, args))
        if cfg.sweep is None:
            raise ConfigError("sweep command requires a 'sweep' section with a parameter grid")
    except RecboundError as exc:
        code = _classify_error(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    spec = cfg.sweep
    base_doc = dict(cfg.raw)
    jobs = max(1, args.jobs)
    if jobs == 1:
        outcomes = [_sweep_point(base_doc, spec, v) for v in spec.values]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_sweep_point, base_doc, spec, v) for v in spec.values]
            outcomes = [f.result() for f in futures]  # grid order, not completion order
    rows = [AGGREGATE_HEADER]
    any_ok = False
    for idx, (value, (status, summary, detail)) in enumerate(zip(spec.values, outcomes)):
        any_ok = any_ok or status == EXIT_OK
        rows.append(",".join([
            str(idx),
            spec.parameter,
            format_float(value),
            str(status),
            _csv_cell(summary.get("verdict")),
            _csv_cell(summary.get("sup_abs")),
            _csv_cell(summary.get("final_abs")),
            _csv_cell(summary.get("growth_exponent")),
            _csv_cell(summary.get("bound_value")),
            _csv_cell(detail),
        ]))
    os.makedirs(args.out, exist_ok=True)
    paths = _out_paths(cfg, args.config, args.out)
    with open(paths["aggregate"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {paths['aggregate']}")
    if cfg.plot:
        oks = [(v, s) for v, (st, s, _) in zip(spec.values, outcomes) if st == EXIT_OK
               and s.get("sup_abs") is not None]
        if oks:
            from . import plots

            plots.render_sweep_figure(
                [float(v) for v, _ in oks],
                [float(s["sup_abs"]) for _, s in oks],
                [float(s.get("growth_exponent") or 0.0) for _, s in oks],
                paths["figure"],
                parameter=spec.parameter,
                title=f"sweep over {spec.parameter} ({len(oks)} points)",
            )
            print(f"wrote {paths['figure']}")
    return EXIT_OK if any_ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# Selftest
# ---------------------------------------------------------------------------

def _selftest_checks() -> list[tuple[str, bool, str]]:
    from fractions import Fraction

    out: list[tuple[str, bool, str]] = []

    def check(name: str, ok: bool, detail: str) -> None:
        out.append((name, bool(ok), detail))

    r = factpoly.raising(3, 2)
    f = factpoly.falling(5, 3)
    b = factpoly.binomial_ext(Fraction(1, 2), 2)
    check("factorial kernels", r == 12 and f == 60 and b == Fraction(-1, 8),
          f"raising(3,2)={r} falling(5,3)={f} binom(1/2,2)={b}")

    grid = [Fraction(v) for v in range(-10, 11)] + [Fraction(1, 2), Fraction(-1, 2),
                                                    Fraction(3, 2), Fraction(-3, 2)]
    reflect_ok = all(
        factpoly.falling(-x, n) == (-1) ** n * factpoly.raising(x, n)
        for x in grid for n in range(0, 21)
    )
    check("reflection identity", reflect_ok, "grid {-10..10, +-1/2, +-3/2} x n<=20")

    vand_ok = all(
        factpoly.falling(x + y, n)
        == sum(factpoly.binomial_ext(n, i) * factpoly.falling(x, i) * factpoly.falling(y, n - i)
               for i in range(n + 1))
        for x in grid[:12] for y in grid[:12] for n in range(0, 16)
    )
    check("convolution identity", vand_ok, "12x12 grid x n<=15")

    shift_ok = all(
        factpoly.shifted_binomial_sides(n, k, m)[0] == factpoly.shifted_binomial_sides(n, k, m)[1]
        for n in range(0, 31) for k in range(0, 31) for m in range(0, 13)
    )
    check("shifted binomial identity", shift_ok, "exhaustive n,k<=30 m<=12")

    u = unit_phase(0.25)
    mods = [abs(unit_phase(x)) for x in (-1e9 + 0.1, -3.7, 0.0, 0.3, 1e9 + 0.4)]
    check("unit phase", abs(u - 1j) < 1e-15 and all(abs(m - 1.0) < 1e-15 for m in mods),
          "e(1/4)=i and |e(x)|=1 on grid")

    sa = partial_sums("0.3*n", 10**5)
    closed = float(np.max(np.abs(np.imag(unit_linear(0.3, 1, 10**5 + 1))))) / math.sin(0.3 * math.pi)
    geo_dev = abs(sa.sup_abs - 1.0 / math.sin(0.3 * math.pi))
    check("geometric envelope", geo_dev < 1e-8,
          f"sup={format_float(sa.sup_abs)} dev={geo_dev:.3g} (closed-form scale {closed:.6f})")

    resid = abel_identity_residual("0.25*n + sqrt(n)", 1, 10**4)
    check("summation-by-parts identity", resid < 1e-7, f"residual={resid:.3g}")

    kl = kusmin_landau_bound(0.5)
    check("envelope bound at theta=1/2", abs(kl - 1.0) < 1e-12, f"cot(pi/4)={format_float(kl)}")

    rng = np.random.default_rng(20240817)
    phi = float(rng.uniform(0.05, 0.95))
    inputs = tuple(phase_source(f"{float(rng.uniform(0.1, 0.9))!r}*n") for _ in range(3))
    init = tuple(complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(3))
    blk = jordan.JordanBlock(1.0, phi, 3, inputs, init)
    ev = jordan.CellSolutionEvaluator(blk)
    devs = []
    for n in (2, 5, 50, 500):
        got = ev.value(1, n)
        ref = jordan.simulate_block(blk, n)[0].final
        devs.append(abs(got - ref) / max(1.0, abs(ref)))
    check("cell solution vs simulation", max(devs) < 1e-9,
          f"max relative deviation {max(devs):.3g} (order 3, n<=500)")

    from .phasefn import explicit_source

    target = math.log(2.0)
    p = jordan.CriticalCellProblem(
        0.0, 2, (explicit_source([0j] * 10**4), phase_source("0.5*n"))
    )
    res = jordan.critical_init_values(p, tol=1e-5, probe_horizon=10**4)
    err = abs(res.values[0] - target)
    check("alternating-series initial value", err < 1e-5,
          f"x_2(1)={format_float(res.values[0].real)} err={err:.3g}")

    one = phase_source("0")
    zsrc = explicit_source([0j] * 256)
    b2 = jordan.JordanBlock(2.0, 0.0, 2, (zsrc, one))
    inits = jordan.required_init_expanding(b2, 1e-18)
    check("expanding initializer", inits == [(1 - 0j), (-1 - 0j)],
          f"rows={[format_float(v.real) for v in inits]}")
    return out


def run_selftest(stream=None) -> int:
    stream = stream or sys.stdout
    checks = _selftest_checks()
    width = max(len(name) for name, _, _ in checks)
    failures = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        stream.write(f"{status}  {name.ljust(width)}  {detail}\n")
    stream.write(f"{len(checks) - failures}/{len(checks)} checks passed\n")
    return EXIT_OK if failures == 0 else EXIT_SELFTEST


def cmd_selftest(args: argparse.Namespace) -> int:
    return run_selftest()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recbound",
        description="Boundedness certificates for linear difference equations "
                    "via exponential sums",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="run one experiment config")
    p_an.add_argument("config", help="path to a JSON experiment config")
    p_an.add_argument("--horizon", type=int, default=None, help="override scan horizon")
    p_an.add_argument("--tol", type=float, default=None, help="override tolerance")
    p_an.add_argument("--out", default=".", help="output directory")
    p_an.add_argument("--plot", action="store_true", help="also render a figure")
    p_an.set_defaults(func=cmd_analyze)

    p_sw = sub.add_parser("sweep", help="run a parameter grid from one config")
    p_sw.add_argument("config", help="path to a JSON experiment config with a sweep section")
    p_sw.add_argument("--jobs", type=int, default=1, help="concurrent grid points")
    p_sw.add_argument("--horizon", type=int, default=None, help="override scan horizon")
    p_sw.add_argument("--tol", type=float, default=None, help="override tolerance")
    p_sw.add_argument("--out", default=".", help="output directory")
    p_sw.add_argument("--plot", action="store_true", help="also render a sweep figure")
    p_sw.set_defaults(func=cmd_sweep)

    p_st = sub.add_parser("selftest", help="exact identities and oracle spot checks")
    p_st.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
