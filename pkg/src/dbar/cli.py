"""Batch entry point: JSON config in, JSON/CSV report out.

Usage: dbar <mode> --config path [--override key=value ...] [--out path]

Modes: exponents, solve, identities, verify, bounds, stokes, supnorm,
convergence.  Exit codes: 0 success, 1 configuration or validation error,
2 numerical failure, 3 tolerance breach in a verify-style mode.  Reports are
byte-identical across runs with the same config: seeded sampling, pairwise
summation, and no wall-clock content.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import verification
from .errors import NumericsError, ValidationError
from .forms import OneForm, ProductDomain, SamplePlan, manufacture_form
from .geometry import StarDomain, make_disk, make_ellipse
from .kernel_algebra import (
    decompose_inverse_product,
    exponent_choice,
    hm_bound,
    kernel_g_derivative,
)
from .operator_t import QuadratureSuite, residual_dbar, solve_t
from .operator_ttilde import solve_ttilde, ttilde_dim2_explicit
from .wirtinger_expr import parse as parse_expr

MODES = (
    "exponents",
    "solve",
    "identities",
    "verify",
    "bounds",
    "stokes",
    "supnorm",
    "convergence",
)


@dataclass
class RunConfig:
    mode: str
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        mode = data.get("mode")
        if mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
        return cls(mode=mode, raw=dict(data))

    def get(self, key, default=None):
        return self.raw.get(key, default)


def _domain_from_descriptor(desc: dict) -> StarDomain:
    kind = desc.get("type")
    center = complex(*desc.get("center", [0.0, 0.0]))
    if kind == "disk":
        return make_disk(center, float(desc["radius"]))
    if kind == "ellipse":
        return make_ellipse(center, float(desc["a"]), float(desc["b"]))
    if kind == "star":
        return StarDomain.from_coeffs(center, desc["coeffs"])
    raise ValidationError(f"unknown domain type {kind!r}")


def _product_domain(config: RunConfig) -> ProductDomain:
    descs = config.get("domains")
    if not descs:
        raise ValidationError("config needs a non-empty 'domains' list")
    return ProductDomain(tuple(_domain_from_descriptor(d) for d in descs))


def _suite(config: RunConfig, domain: ProductDomain) -> QuadratureSuite:
    quad = config.get("quadrature", {})
    nr = quad.get("nr", 48)
    ntheta = quad.get("ntheta", 48)
    nboundary = quad.get("nboundary")
    return QuadratureSuite.build(domain, nr, ntheta, nboundary)


def _form(config: RunConfig, n: int) -> OneForm:
    if config.get("potential"):
        u = parse_expr(config.get("potential"), n)
        return manufacture_form(u, n)
    comps = config.get("components")
    if not comps:
        raise ValidationError("config needs 'potential' or 'components'")
    if len(comps) != n:
        raise ValidationError(f"need {n} components, got {len(comps)}")
    return OneForm(n, tuple(parse_expr(c, n) for c in comps))


def _plan(config: RunConfig, domain: ProductDomain) -> SamplePlan:
    spec = config.get("eval_points", {"count": 5, "margin": 0.05, "seed": 1})
    if isinstance(spec, list):
        pts = [tuple(complex(c[0], c[1]) for c in point) for point in spec]
        for p in pts:
            if not domain.contains(p, 0.0):
                raise ValidationError(f"eval point {p} lies outside the domain")
        return SamplePlan.explicit(pts)
    return SamplePlan.sample(
        domain,
        int(spec.get("count", 5)),
        float(spec.get("margin", 0.05)),
        int(spec.get("seed", 1)),
    )


def _complex_out(value: complex) -> list[float]:
    return [float(np.real(value)), float(np.imag(value))]


def run_exponents(config: RunConfig) -> tuple[dict, bool]:
    n_values = config.get("n")
    if n_values is None:
        n_values = [2, 3, 4]
    if isinstance(n_values, int):
        n_values = [n_values]
    rows = []
    for n in n_values:
        for m in range(0, n):
            choice = exponent_choice(n, m)
            rows.append(
                {"n": n, "m": m, "k": choice.k, "parts": list(choice.parts)}
            )
    return {"table": rows}, True


def run_solve(config: RunConfig) -> tuple[dict, bool]:
    domain = _product_domain(config)
    n = domain.arity
    suite = _suite(config, domain)
    form = _form(config, n)
    plan = _plan(config, domain)
    operator = config.get("operator", "t")
    if operator not in ("t", "ttilde", "both"):
        raise ValidationError(f"operator must be t|ttilde|both, got {operator!r}")
    fd_step = float(config.get("fd_step", 1e-5))
    margin = float(config.get("margin", 1e-3))
    results = []
    for p in plan.points:
        entry: dict[str, Any] = {"point": [_complex_out(c) for c in p]}
        value_t = value_tt = None
        if operator in ("t", "both"):
            rep = solve_t(form, p, suite, margin, fd_step)
            value_t = rep.value
            entry["t"] = {
                "value": _complex_out(rep.value),
                "terms": [
                    {
                        "indices": list(t.indices),
                        "sign": t.sign,
                        "component": t.component,
                        "stack": list(t.stack),
                        "value": _complex_out(t.value),
                    }
                    for t in rep.terms
                ],
            }
        if operator in ("ttilde", "both"):
            rep = solve_ttilde(form, p, suite, margin, fd_step)
            value_tt = rep.value
            entry["ttilde"] = {
                "value": _complex_out(rep.value),
                "closed": rep.closed,
                "closedness_residual": rep.closedness_residual,
                "brackets": [
                    {
                        "indices": list(b.indices),
                        "sign": b.sign,
                        "value": _complex_out(b.value),
                    }
                    for b in rep.brackets
                ],
            }
        if operator == "both":
            entry["operator_gap"] = abs(value_t - value_tt)
        results.append(entry)
    report = {"points": results, "quadrature": suite.sizes()}
    ok = True
    tol = config.get("tolerances", {}).get("operator_gap")
    if operator == "both" and tol is not None:
        ok = all(e["operator_gap"] <= tol for e in results)
    return report, ok


def run_identities(config: RunConfig) -> tuple[dict, bool]:
    tols = config.get("tolerances", {})
    seed = int(config.get("seed", 7))
    rng = np.random.default_rng(seed)
    checks = []

    tol = float(tols.get("decomposition", 1e-12))
    count = int(config.get("samples", 10_000))
    worst = 0.0
    for _ in range(count):
        m = int(rng.integers(1, 9))
        a = rng.uniform(0.1, 10.0, m) * np.exp(2j * np.pi * rng.uniform(0, 1, m))
        total = sum(decompose_inverse_product(a))
        target = 1.0 / np.prod(a)
        worst = max(worst, abs(total - target) / abs(target))
    checks.append({"name": "inverse_product_decomposition", "worst": worst, "tol": tol, "pass": worst <= tol})

    tol = float(tols.get("kernel_derivative", 1e-9))
    worst = 0.0
    from .kernel_algebra import big_g  # local import to keep module surface tidy

    for n in (2, 3):
        for trial in range(50):
            zeta = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
            z = zeta + (0.4 + 0.1 * rng.uniform(0, 1, n)) * np.exp(
                2j * np.pi * rng.uniform(0, 1, n)
            )
            I = tuple(range(1, n + 1))
            val = kernel_g_derivative(tuple(zeta), tuple(z), n, I, tuple(range(1, n)))
            offs = zeta - z
            G = big_g(offs)
            m = n - 1
            import math

            ref = math.factorial(m) / G ** (m + 1)
            for j in range(n - 1):
                ref *= abs(offs[j]) ** (2 * (m - 1))
            ref *= np.conjugate(offs[-1]) * abs(offs[-1]) ** (2 * m - 2)
            worst = max(worst, abs(val - ref) / max(1e-30, abs(ref)))
    checks.append({"name": "kernel_derivative_closed_form", "worst": worst, "tol": tol, "pass": worst <= tol})

    tol = float(tols.get("hm_bound", 0.0))
    import math

    bad = 0
    for n in (2, 3, 4):
        for m in range(0, n):
            choice = exponent_choice(n, m)
            for _ in range(200):
                zeta = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
                z = zeta + rng.uniform(0.2, 1.0, n) * np.exp(
                    2j * np.pi * rng.uniform(0, 1, n)
                )
                lhs = abs(
                    kernel_g_derivative(
                        tuple(zeta), tuple(z), n, tuple(range(1, n + 1)), tuple(range(1, m + 1))
                    )
                )
                rhs = math.factorial(m) * hm_bound(tuple(zeta), tuple(z), m, choice)
                if lhs > rhs * (1 + 1e-12):
                    bad += 1
    checks.append({"name": "derivative_bound", "violations": bad, "tol": tol, "pass": bad == 0})

    ok = all(c["pass"] for c in checks)
    return {"checks": checks}, ok


def run_bounds(config: RunConfig) -> tuple[dict, bool]:
    descs = config.get("domains") or [{"type": "disk", "center": [0, 0], "radius": 1}]
    d = _domain_from_descriptor(descs[0])
    alphas_area = config.get("alphas_area", [1.0 / 3.0, 5.0 / 3.0])
    alphas_bdry = config.get("alphas_boundary", [0.5, 0.75])
    distances = config.get("distances")
    if distances is None:
        distances = [0.1 / 2**k for k in range(8)]
    direction = complex(*config.get("direction", [1.0, 0.0]))
    direction /= abs(direction)
    theta = float(np.angle(direction))
    r_edge = float(d.radius(theta))
    z_list = [d.center + (r_edge - dist) * direction for dist in distances]
    growth = float(config.get("growth_factor", 1.1))
    table = []
    ok = True
    for alpha in alphas_area:
        vals = verification.lemma_bound_area(d, alpha, z_list)
        passed = _monotone_bounded(vals, growth)
        ok = ok and passed
        table.append({"kind": "area", "alpha": alpha, "values": vals, "pass": passed})
    for alpha in alphas_bdry:
        vals = verification.lemma_bound_boundary(d, alpha, z_list)
        passed = _monotone_bounded(vals, growth)
        ok = ok and passed
        table.append({"kind": "boundary", "alpha": alpha, "values": vals, "pass": passed})
    return {"distances": list(distances), "probes": table}, ok


def _monotone_bounded(values, growth: float) -> bool:
    running = values[0]
    for v in values[1:]:
        if v > growth * running:
            return False
        running = max(running, v)
    return True


def run_stokes(config: RunConfig) -> tuple[dict, bool]:
    domain = _product_domain(config)
    suite = _suite(config, domain)
    n = domain.arity
    pairs = config.get("pairs")
    if not pairs:
        raise ValidationError("stokes mode needs 'pairs': [[f, g], ...]")
    tol = float(config.get("tolerances", {}).get("stokes", 1e-6))
    rows = []
    ok = True
    for f_text, g_text in pairs:
        f = parse_expr(f_text, n)
        g = parse_expr(g_text, n)
        lhs, rhs, diff = verification.stokes_check(f, g, domain, suite)
        passed = diff <= tol * (1.0 + abs(lhs))
        ok = ok and passed
        rows.append(
            {
                "f": f_text,
                "g": g_text,
                "lhs": _complex_out(lhs),
                "rhs": _complex_out(rhs),
                "diff": diff,
                "pass": passed,
            }
        )
    return {"rows": rows}, ok


def run_supnorm(config: RunConfig) -> tuple[dict, bool]:
    domain = _product_domain(config)
    suite = _suite(config, domain)
    plan = _plan(config, domain)
    catalog = verification.default_form_catalog(domain.arity)
    rows = verification.supnorm_study(catalog, domain, suite, plan)
    max_ratio = max(r.ratio for r in rows if r.ratio is not None)
    report = {
        "rows": [
            {"label": r.label, "sup_f": r.sup_f, "sup_tf": r.sup_tf, "ratio": r.ratio}
            for r in rows
        ],
        "max_ratio": max_ratio,
    }
    tol = config.get("tolerances", {}).get("max_ratio")
    ok = True if tol is None else max_ratio <= float(tol)
    return report, ok


def run_convergence(config: RunConfig) -> tuple[dict, bool]:
    domain = _product_domain(config)
    n = domain.arity
    u = parse_expr(config.get("potential", "conj(z1)"), n)
    plan = _plan(config, domain)
    sizes = config.get("suite_sizes", [16, 32, 64])
    suites = [QuadratureSuite.build(domain, s, s) for s in sizes]
    rows = verification.convergence_study(u, domain, suites, plan, float(config.get("fd_step", 1e-4)))
    report = {
        "rows": [
            {
                "nr": r.nr,
                "ntheta": r.ntheta,
                "max_error": r.max_error,
                "residual": r.residual,
            }
            for r in rows
        ]
    }
    return report, True


def run_verify(config: RunConfig) -> tuple[dict, bool]:
    ident_report, ident_ok = run_identities(config)
    sub = RunConfig(
        mode="bounds",
        raw={**config.raw, "domains": config.get("domains") or [{"type": "disk", "center": [0, 0], "radius": 1}]},
    )
    bounds_report, bounds_ok = run_bounds(sub)
    return (
        {"identities": ident_report, "bounds": bounds_report},
        ident_ok and bounds_ok,
    )


_RUNNERS = {
    "exponents": run_exponents,
    "solve": run_solve,
    "identities": run_identities,
    "verify": run_verify,
    "bounds": run_bounds,
    "stokes": run_stokes,
    "supnorm": run_supnorm,
    "convergence": run_convergence,
}


def run(config: RunConfig) -> tuple[int, dict]:
    """Execute a config; returns (exit_code, report)."""
    try:
        body, ok = _RUNNERS[config.mode](config)
    except ValidationError as exc:
        return 1, {"error": str(exc), "kind": "validation"}
    except NumericsError as exc:
        return 2, {"error": str(exc), "kind": "numerical"}
    report = {"config": config.raw, "mode": config.mode, "report": body, "pass": ok}
    verify_modes = ("identities", "verify", "bounds", "stokes")
    code = 0 if (ok or config.mode not in verify_modes) else 3
    return code, report


def _flatten_rows(report: dict):
    """Best-effort tabular view of a report for CSV output."""
    body = report.get("report", {})
    for key in ("table", "rows", "checks", "probes", "points"):
        if key in body and isinstance(body[key], list):
            return body[key]
    return [body]


def _write_report(report: dict, path: str | None, fmt: str) -> str:
    if fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    elif fmt == "csv":
        rows = _flatten_rows(report)
        buf = io.StringIO()
        if rows:
            keys = sorted({k for row in rows for k in row})
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(keys)
            for row in rows:
                writer.writerow([_csv_cell(row.get(k)) for k in keys])
        text = buf.getvalue()
    else:
        raise ValidationError(f"unknown output format {fmt!r}")
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _json_default(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def _csv_cell(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (list, tuple)):
        return json.dumps(value)
    return value


def _apply_overrides(data: dict, overrides: list[str]) -> dict:
    out = dict(data)
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override {item!r} must look like key=value")
        key, text = item.split("=", 1)
        current = out.get(key)
        if isinstance(current, (dict, list)):
            raise ValidationError(f"override {key!r} targets a non-scalar field")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        if isinstance(value, (dict, list)):
            raise ValidationError(f"override {key!r} must be a scalar")
        out[key] = value
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dbar", description="Inhomogeneous Cauchy-Riemann solver harness"
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=False, help="JSON config path")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a top-level scalar config field",
    )
    parser.add_argument("--out", help="report output path")
    args = parser.parse_args(argv)

    try:
        data: dict[str, Any] = {}
        if args.config:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        data["mode"] = args.mode
        data = _apply_overrides(data, args.override)
        config = RunConfig.from_dict(data)
    except (ValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    code, report = run(config)
    if "error" in report:
        print(f"error: {report['error']}", file=sys.stderr)
        return code

    out_cfg = config.get("output", {})
    path = args.out or out_cfg.get("path")
    fmt = out_cfg.get("format", "json")
    try:
        text = _write_report(report, path, fmt)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not path:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
