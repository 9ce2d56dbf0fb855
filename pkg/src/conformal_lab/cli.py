"""Command line front end: ``conformal-lab run | verify | schema``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .domain import BoundaryCurve, PlanarDomain, TubularChart, boundary_formula_V
from .errors import ConformalLabError, NotConstantOnBoundary
from .fields import (PlanarMap, ScalarField, conformal_defect, loewner_field,
                     map_conformal_defect, riemannian_defect)
from .flow import field_vs_flow_experiment, flow_as_map
from .index import locate_zeros
from .sphere import (GFAC, StereoChart, SupportFunction, find_umbilics, first_harmonic_defect,
                     principal_gap_oracle, umbilic_defect)
from .svgplot import Panel, render
from .symplecto import (conformal_points_of_map, derivative_relations_check, midpoint,
                        packed_defect, recover_generating_function)
from .verify import SUITES, run_suites

SCHEMA_ID = "conformal-lab/1"

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_POINT = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

JOB_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": SCHEMA_ID + "/job",
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "kind": {"enum": ["field", "loewner", "riemannian", "map", "flow", "sphere", "verify"]},
        "H": {"type": "string"},
        "n": {"type": "integer", "minimum": 1, "maximum": 8},
        "gfac": {"type": "string"},
        "map": {
            "type": "object", "additionalProperties": False, "required": ["f", "g"],
            "properties": {"f": {"type": "string"}, "g": {"type": "string"}},
        },
        "eps": _NUM,
        "eps_list": {"type": "array", "items": _NUM, "minItems": 1},
        "experiment": {"type": "boolean"},
        "tol": _POS,
        "support": {
            "oneOf": [
                {"type": "string"},
                {"type": "object", "additionalProperties": False, "required": ["ellipsoid"],
                 "properties": {"ellipsoid": {"type": "array", "items": _POS,
                                              "minItems": 3, "maxItems": 3}}},
            ]
        },
        "domain": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["type"],
                 "properties": {"type": {"const": "disc"}, "center": _POINT, "radius": _POS}},
                {"type": "object", "additionalProperties": False, "required": ["type", "a", "b"],
                 "properties": {"type": {"const": "ellipse"}, "a": _POS, "b": _POS,
                                "center": _POINT}},
                {"type": "object", "additionalProperties": False, "required": ["type", "x", "y"],
                 "properties": {"type": {"const": "parametric"}, "x": {"type": "string"},
                                "y": {"type": "string"}}},
            ]
        },
        "resolution": _POS,
        "floor": _POS,
        "budget": {"type": "integer", "minimum": 1},
        "suite": {"enum": ["all", *SUITES]},
        "seed": {"type": "integer"},
        "outputs": {
            "type": "object", "additionalProperties": False,
            "properties": {k: {"type": "string"} for k in ("report", "plot", "csv")},
        },
    },
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["field", "loewner", "riemannian"]}}},
         "then": {"required": ["H", "domain"]}},
        {"if": {"properties": {"kind": {"const": "loewner"}}}, "then": {"required": ["n"]}},
        {"if": {"properties": {"kind": {"const": "map"}}}, "then": {"required": ["map", "domain"]}},
        {"if": {"properties": {"kind": {"const": "flow"}}},
         "then": {"required": ["H", "domain"],
                  "anyOf": [{"required": ["eps"]}, {"required": ["eps_list"]}]}},
        {"if": {"properties": {"kind": {"const": "sphere"}}}, "then": {"required": ["support"]}},
    ],
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": SCHEMA_ID + "/report",
    "type": "object",
    "required": ["schema", "status", "job"],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "version": {"type": "string"},
        "status": {"enum": ["ok", "error"]},
        "job": {"type": "object"},
        "error": {
            "type": "object", "required": ["type", "message", "exit_code"],
            "properties": {"type": {"type": "string"}, "message": {"type": "string"},
                           "exit_code": {"type": "integer"}},
        },
        "boundary": {
            "type": "object", "required": ["value", "guaranteed"],
            "properties": {"value": _NUM, "guaranteed": {"type": "boolean"},
                           "samples": {"type": "integer"}, "min_norm": _NUM},
        },
        "certificates": {
            "type": "array",
            "items": {"type": "object", "required": ["box", "degree"],
                      "properties": {"box": {"type": "array", "items": _NUM},
                                     "degree": {"type": "integer"}}},
        },
        "degree_sum": {"type": "integer"},
        "checks": {"type": "object"},
        "diagnostics": {"type": "object"},
        "table": {"type": "array"},
        "umbilics": {"type": "array"},
        "suites": {"type": "object"},
        "timing": {"type": "object"},
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
}


# serialization ----------------------------------------------------------------------------

def _plain(o):
    if isinstance(o, dict):
        return {str(k): _plain(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_plain(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_plain(v) for v in o.tolist()]
    if isinstance(o, (bool, np.bool_)):
        return bool(o)
    if isinstance(o, (int, np.integer)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        return float(o)
    return o


def _encode(o, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(o, dict):
        if not o:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in o.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(o, list):
        if not o:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in o):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in o) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in o) + "\n" + end + "]"
    if isinstance(o, bool) or o is None:
        return json.dumps(o)
    if isinstance(o, int):
        return str(o)
    if isinstance(o, float):
        if not math.isfinite(o):
            return "null"
        return format(o, ".17g")
    return json.dumps(o)


def dumps(report, indent=2):
    """JSON text with every float printed to 17 significant digits."""
    return _encode(_plain(report), indent, 0) + "\n"


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    umask = os.umask(0)
    os.umask(umask)
    try:
        os.chmod(tmp, 0o666 & ~umask)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# job construction --------------------------------------------------------------------------

def build_domain(spec):
    kind = spec["type"]
    if kind == "disc":
        return PlanarDomain.disc(tuple(spec.get("center", (0.0, 0.0))), spec.get("radius", 1.0))
    if kind == "ellipse":
        return PlanarDomain.ellipse(spec["a"], spec["b"], tuple(spec.get("center", (0.0, 0.0))))
    return PlanarDomain(BoundaryCurve.parametric(spec["x"], spec["y"]))


def build_support(spec):
    if isinstance(spec, dict):
        return SupportFunction.ellipsoid(*spec["ellipsoid"])
    return SupportFunction(spec)


def _boundary(res):
    return {"value": res.value, "guaranteed": res.guaranteed, "samples": res.samples,
            "min_norm": res.min_norm}


def _cert_panel_boxes(certs):
    return [(*c.box, c.degree) for c in certs]


def _sample_rows(V, domain, n=32, extra=None):
    x0, y0, x1, y1 = domain.bbox
    gx, gy = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    gx, gy = gx.ravel(), gy.ravel()
    keep = domain.contains(gx, gy)
    gx, gy = gx[keep], gy[keep]
    v = V(gx, gy)
    rows = []
    for i in range(gx.size):
        row = {"x": gx[i], "y": gy[i], "vx": v[0, i], "vy": v[1, i],
               "norm": math.hypot(v[0, i], v[1, i])}
        if extra:
            row = {**extra, **row}
        rows.append(row)
    return rows


class Outcome:
    def __init__(self):
        self.report = {}
        self.panels = []
        self.rows = []


def _planar_job(job, out, V, domain, title):
    certs = locate_zeros(V, domain, job.get("resolution"), job.get("floor"),
                         budget=job.get("budget", 5_000_000))
    out.report["boundary"] = _boundary(certs.boundary)
    out.report["certificates"] = [c.to_dict() for c in certs]
    out.report["degree_sum"] = certs.degree_sum
    out.report["warnings"] = list(certs.warnings)
    out.report["diagnostics"] = {"field_scale": certs.scale, "floor": certs.floor,
                                 "resolution": certs.resolution, "evaluations": certs.evaluations}
    if getattr(V, "jacobian_is_fd", False):
        out.report["warnings"].append("Jacobian for polishing from finite differences")
    out.panels.append(Panel(title, V, domain, _cert_panel_boxes(certs)))
    out.rows = _sample_rows(V, domain)
    return certs


def _run_field(job, out, rng):
    domain = build_domain(job["domain"])
    H = ScalarField.from_expression(job["H"])
    kind = job["kind"]
    if kind == "field":
        V = conformal_defect(H)
    elif kind == "loewner":
        V = loewner_field(H, job["n"])
    else:
        V = riemannian_defect(H, ScalarField.from_expression(job.get("gfac", GFAC)))
    _planar_job(job, out, V, domain, V.label)
    if kind == "field":
        chart = TubularChart(domain.curve)
        t = np.linspace(0.0, domain.curve.length, 100, endpoint=False)
        try:
            formula = boundary_formula_V(H, chart, t)
        except NotConstantOnBoundary:
            return
        direct = V(*domain.curve.point(t))
        out.report["checks"] = {"boundary_formula_residual": float(np.abs(formula - direct).max())}


def _map_pipeline(job, out, F, domain):
    res = conformal_points_of_map(F, domain, job.get("resolution"), job.get("floor"))
    gf = recover_generating_function(F, domain)
    probes = np.column_stack(domain.curve.point(
        np.linspace(0.0, domain.curve.length, 16, endpoint=False))) * 0.5 + np.array(domain.centroid) * 0.5
    out.report["boundary"] = _boundary(res.boundary)
    out.report["certificates"] = [c.to_dict() for c in res.certificates]
    out.report["degree_sum"] = res.degree_sum
    out.report["checks"] = {
        "boundary_identity_residual": res.boundary_identity_residual,
        "closedness_residual": gf.closedness_residual,
        "boundary_gradient": gf.boundary_gradient,
        "derivative_relations_residual": derivative_relations_check(gf, F, probes),
    }
    out.report["diagnostics"] = {
        "moderateness_min": res.moderateness.value,
        "moderateness_witness": list(res.moderateness.witness),
        "boundary_fix_residual": res.boundary_fix_residual,
        "symplectic_residual": F.max_symplectic_residual,
    }
    out.report["warnings"] = list(res.warnings)
    V = packed_defect(F, domain)
    out.panels.append(Panel(f"packed defect of {F.label}", V, domain,
                            [(*c.box, c.degree) for c in res.certificates]))
    out.rows = _sample_rows(V, domain, n=24)


def _run_map(job, out, rng):
    domain = build_domain(job["domain"])
    F = PlanarMap.from_components(job["map"]["f"], job["map"]["g"], symplectic_claimed=True)
    _map_pipeline(job, out, F, domain)


def _run_flow(job, out, rng):
    domain = build_domain(job["domain"])
    tol = job.get("tol", 1e-10)
    if job.get("experiment") or "eps" not in job:
        eps_list = job.get("eps_list", [job.get("eps")])
        out.report["table"] = field_vs_flow_experiment(job["H"], eps_list, domain,
                                                       job.get("resolution"), tol)
        out.report["warnings"] = ["exploratory table: no pass/fail verdict is implied"]
        V = conformal_defect(job["H"])
        out.panels.append(Panel(V.label, V, domain, []))
        out.rows = _sample_rows(V, domain)
        return
    F = flow_as_map(job["H"], job["eps"], tol)
    _map_pipeline(job, out, F, domain)


def _run_sphere(job, out, rng):
    Hs = build_support(job["support"])
    res = find_umbilics(Hs, job.get("resolution"), job.get("floor"), seed=int(rng.integers(2**31)))
    rows = []
    for u in res.umbilics:
        d = u.to_dict()
        d["first_harmonic_defect"] = first_harmonic_defect(Hs, u.normal)
        if Hs.params.get("kind") == "ellipsoid":
            d["principal_gap"] = principal_gap_oracle(Hs, u.normal)
        rows.append(d)
    out.report["umbilics"] = rows
    out.report["degree_sum"] = res.degree_sum
    out.report["diagnostics"] = {"chart_windings": res.chart_windings,
                                 "line_index_sum": res.line_index_sum,
                                 "rotation_retries": res.retries}
    out.report["warnings"] = list(res.warnings)
    disc = PlanarDomain.disc((0.0, 0.0), 1.2)
    for pole in ("north", "south"):
        chart = StereoChart(pole)
        V = umbilic_defect(Hs, chart)
        markers = [(*u.chart_location, f"deg {u.degree}") for u in res.umbilics if u.chart == pole]
        out.panels.append(Panel(f"{pole} chart", V, disc, [], markers))
        out.rows.extend(_sample_rows(V, disc, n=20, extra={"chart": pole}))


def _run_verify(job, out, rng):
    suites = run_suites(job.get("suite", "all"), seed=int(rng.integers(2**31)))
    out.report["suites"] = suites
    out.report["checks"] = {name: s["max"] for name, s in suites.items()}


RUNNERS = {"field": _run_field, "loewner": _run_field, "riemannian": _run_field,
           "map": _run_map, "flow": _run_flow, "sphere": _run_sphere, "verify": _run_verify}


def run_job(job, seed=0, timing=False):
    """Validate and execute a job; returns ``(report, panels, csv_rows, exit_code)``."""
    out = Outcome()
    out.report = {"schema": SCHEMA_ID, "version": __version__, "status": "ok", "job": job}
    code = 0
    start = time.perf_counter()
    try:
        jsonschema.validate(job, JOB_SCHEMA)
        rng = np.random.default_rng(job.get("seed", seed))
        RUNNERS[job["kind"]](job, out, rng)
        if job["kind"] == "verify" and not all(s["passed"] for s in out.report["suites"].values()):
            code = 1
    except jsonschema.ValidationError as exc:
        code = 2
        out.report["status"] = "error"
        out.report["error"] = {"type": "SchemaError", "message": exc.message, "exit_code": code}
    except ConformalLabError as exc:
        code = exc.exit_code
        out.report["status"] = "error"
        out.report["error"] = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
        for attr in ("location", "offset"):
            if getattr(exc, attr, None) is not None:
                out.report["error"][attr] = getattr(exc, attr)
    if timing:
        out.report["timing"] = {"seconds": time.perf_counter() - start}
    return out.report, out.panels, out.rows, code


def rows_to_csv(rows):
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\r\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: format(v, ".17g") if isinstance(v, float) else v
                         for k, v in row.items()})
    return buf.getvalue()


# entry point ---------------------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="conformal-lab",
                                description="Certified conformal points of planar fields and maps.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a JSON job")
    run.add_argument("job")
    run.add_argument("--out", help="report path (default: stdout)")
    run.add_argument("--plot", help="SVG output path")
    run.add_argument("--csv", help="CSV field samples path")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--threads", type=int, default=None, help="cap on BLAS threads")
    run.add_argument("--timing", action="store_true", help="include wall-clock timing")
    ver = sub.add_parser("verify", help="run the identity check suites")
    ver.add_argument("--suite", choices=["all", *SUITES], default="all")
    ver.add_argument("--seed", type=int, default=0)
    sch = sub.add_parser("schema", help="print the job JSON schema")
    sch.add_argument("--report", action="store_true", help="print the report schema instead")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "schema":
        sys.stdout.write(json.dumps(REPORT_SCHEMA if args.report else JOB_SCHEMA, indent=2) + "\n")
        return 0
    if args.command == "verify":
        report, _, _, code = run_job({"kind": "verify", "suite": args.suite}, seed=args.seed)
        sys.stdout.write(dumps(report))
        return code
    try:
        with open(args.job, encoding="utf-8") as fh:
            job = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"conformal-lab: cannot read job: {exc}\n")
        return 2
    outputs = job.get("outputs", {}) if isinstance(job, dict) else {}
    with threadpool_limits(args.threads):
        report, panels, rows, code = run_job(job, seed=args.seed, timing=args.timing)
    text = dumps(report)
    report_path = args.out or outputs.get("report")
    if report_path:
        write_atomic(report_path, text)
    else:
        sys.stdout.write(text)
    plot_path = args.plot or outputs.get("plot")
    if plot_path and panels:
        write_atomic(plot_path, render(panels))
    csv_path = args.csv or outputs.get("csv")
    if csv_path and rows:
        write_atomic(csv_path, rows_to_csv(rows))
    if code not in (0, 1):
        sys.stderr.write(f"conformal-lab: {report['error']['type']}: {report['error']['message']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
