"""Command-line front end.

Every subcommand prints one JSON :class:`RunReport` on stdout and exits with
the code of its status: 0 ok, 1 invalid input, 2 numerical failure, 3
verification failure.

Settings come from three layers, later ones winning: built-in defaults, a
JSON config file (``--config``), then explicit command-line options.  The
config file is an object whose keys are option names with underscores
(``max_iter``, ``g_floor``); keys may sit at the top level or inside a
section named after the subcommand, the section taking precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional, Sequence

from . import acceptance, curve, kneading, paramspace, render
from .angles import alpha_beta, angle, classify, format_angle, itinerary, orbit
from .dynamics import ConfigurationError, CubicMap, DomainError, NumericalError
from .rays import ray_landing, trace_ray

# Newton distance from v to the curve accepted by ``classify``
ON_CURVE_TOL = 1e-8

STATUS_CODES = {"ok": 0, "invalid_input": 1, "numerical_error": 2, "verification_failed": 3}


@dataclass
class RunReport:
    command: str
    status: str = "ok"
    artifacts: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return STATUS_CODES[self.status]

    def to_json(self) -> dict:
        return {"command": self.command, "status": self.status, "exit_code": self.exit_code,
                "artifacts": self.artifacts, "metrics": self.metrics}


class InvalidInput(Exception):
    pass


class VerificationFailed(Exception):
    def __init__(self, metrics: dict):
        super().__init__("verification failed")
        self.metrics = metrics


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; that code means numerical failure here
    def error(self, message):
        raise InvalidInput(message)


# --- value parsing ----------------------------------------------------------------------------


def parse_complex(x: Any) -> complex:
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, (int, float, complex)):
        return complex(x)
    try:
        return complex(str(x).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise InvalidInput(f"not a complex number: {x!r}") from None


def parse_pixels(x: Any) -> tuple[int, int]:
    if isinstance(x, (list, tuple)):
        w, h = x
    else:
        w, _, h = str(x).lower().partition("x")
    try:
        return int(w), int(h)
    except ValueError:
        raise InvalidInput(f"pixels must look like 640x480, got {x!r}") from None


def parse_angle(x: Any) -> Fraction:
    try:
        return angle(str(x))
    except (ValueError, ZeroDivisionError):
        raise InvalidInput(f"not a rational angle: {x!r}") from None


def _cplx(z: complex) -> list[float]:
    return [z.real, z.imag]


# --- outputs ----------------------------------------------------------------------------------


def _write_rows(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _write_json(path: str, data: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(report: RunReport, out: Optional[str], data: Any,
          header: Optional[Sequence[str]] = None, rows: Optional[Sequence[Sequence[Any]]] = None) -> None:
    """Write ``data`` as JSON, or ``rows`` as CSV when ``out`` ends in .csv."""
    if not out:
        report.metrics["result"] = data
        return
    if out.endswith(".csv"):
        if rows is None:
            raise InvalidInput("this command has no CSV form; use a .json path")
        _write_rows(out, header, rows)
    else:
        _write_json(out, data)
    report.artifacts.append(out)


# --- commands ---------------------------------------------------------------------------------


def cmd_angle(s: dict, report: RunReport) -> None:
    t = parse_angle(s["theta"])
    cls = classify(t)
    data = {"angle": format_angle(t), "preperiod": cls.preperiod, "period": cls.period,
            "orbit": [format_angle(x) for x in orbit(t, s["orbit"])]}
    if s["partition"] is not None:
        th = parse_angle(s["partition"])
        data["partition"] = format_angle(th)
        data["itinerary_plus"] = itinerary(th, t, "plus", s["orbit"])
        data["itinerary_minus"] = itinerary(th, t, "minus", s["orbit"])
    if s["ell"] is not None:
        al, be = alpha_beta(s["ell"])
        data["alpha"], data["beta"] = format_angle(al), format_angle(be)
    _emit(report, s["out"], data)


def cmd_knead(s: dict, report: RunReport) -> None:
    if s["verify_moves"] is not None:
        rep = kneading.verify_move_lemma(s["verify_moves"])
        data = {"p": rep.p, "words": rep.words, "edges": rep.edges, "max_chain": rep.max_chain,
                "bound": rep.bound, "monotone": rep.monotone, "terminal_words": list(rep.terminal_words),
                "ok": rep.ok}
        _emit(report, s["out"], data)
        if not rep.ok:
            raise VerificationFailed(data)
        return
    if s["word"] is None:
        raise InvalidInput("knead needs a word or --verify-moves P")
    w = kneading.check_word(s["word"])
    path = kneading.path_to_distinguished(w)
    moves = sorted(str(m) for m in kneading.iter_moves(w))
    data = {"word": w, "max_return_time": kneading.max_return_time(w),
            "return_times": paramspace.return_times(w), "terminal": kneading.is_terminal(w),
            "moves": moves, "path_to_distinguished": [str(m) for m in path]}
    _emit(report, s["out"], data, ["source", "target", "kind", "position"],
          [[m.source, m.target, m.kind, "" if m.position is None else m.position] for m in path])


def _map(s: dict, p: Optional[int] = None) -> CubicMap:
    return CubicMap(parse_complex(s["a"]), parse_complex(s["v"]), s["p"] if p is None else p)


def cmd_ray(s: dict, report: RunReport) -> None:
    f = _map(s)
    t = parse_angle(s["theta"])
    ray = ray_landing(f, t, s["g_floor"]) if s["land"] else trace_ray(f, t, s["g_floor"])
    report.metrics.update({"points": len(ray.points), "terminated_at": ray.terminated_at,
                           "landing": None if ray.landing is None else _cplx(ray.landing)})
    if s["out"] and s["out"].endswith(".csv"):
        with open(s["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write(ray.to_csv())
        report.artifacts.append(s["out"])
    else:
        _emit(report, s["out"], ray.to_json())


def _render_config(s: dict, plane: str) -> render.RenderConfig:
    cfg = {"plane": plane, "center": parse_complex(s["center"]), "width": float(s["width"]),
           "pixels": parse_pixels(s["pixels"]), "p": int(s["p"]), "max_iter": int(s["max_iter"]),
           "palette": s["palette"], "mark_collisions": not s["no_collisions"]}
    if s["max_pixels"] is not None:
        cfg["max_pixels"] = int(s["max_pixels"])
    if s["a"] is not None:
        cfg["seed_map"] = (parse_complex(s["a"]), parse_complex(s["v"] or 0))
    if plane == "parameter_a_slice":
        sheet = s["sheet"]
        cfg["sheet"] = sheet if sheet == "continuation" else int(sheet)
    return render.RenderConfig(**cfg)


def _cmd_render(plane: str) -> Callable[[dict, RunReport], None]:
    def run(s: dict, report: RunReport) -> None:
        if s["from_png"]:
            cfg = render.read_config(s["from_png"])
        else:
            cfg = _render_config(s, plane)
        cfg.validate()
        sidecar = s["json"] or s["png"].rsplit(".", 1)[0] + ".json"
        meta = render.render_to_files(cfg, s["png"], sidecar)
        report.artifacts += [s["png"], sidecar]
        report.metrics.update({k: v for k, v in meta["metrics"].items() if k != "collisions"})
        report.metrics["collision_pixels"] = len(meta["metrics"].get("collisions", []))
        report.metrics["seconds"] = meta["seconds"]
    return run


def cmd_curve_fiber(s: dict, report: RunReport) -> None:
    fib = curve.fiber(parse_complex(s["a"]), s["p"])
    res = curve.period_residuals(fib.a, fib.roots, s["p"])
    report.metrics.update({"degree": fib.degree, "min_separation": fib.min_separation(),
                           "max_residual": float(res.max())})
    rows = [[i, repr(z.real), repr(z.imag), repr(float(r))] for i, (z, r) in enumerate(zip(fib.roots, res))]
    data = {"a": _cplx(fib.a), "p": s["p"], "roots": [_cplx(z) for z in fib.roots]}
    _emit(report, s["out"], data, ["index", "re", "im", "residual"], rows)


def cmd_curve_branch(s: dict, report: RunReport) -> None:
    pts = curve.branch_points(s["p"], radius=s["radius"])
    report.metrics["count"] = len(pts)
    _emit(report, s["out"], {"p": s["p"], "branch_points": [_cplx(z) for z in pts]},
          ["re", "im"], [[repr(z.real), repr(z.imag)] for z in pts])


def cmd_curve_monodromy(s: dict, report: RunReport) -> None:
    res = curve.monodromy_transitive(s["p"], basepoint=parse_complex(s["basepoint"]),
                                     radius_scale=s["radius_scale"])
    data = res.to_json()
    report.metrics.update({k: data[k] for k in ("degree", "transitive", "orbit_count", "inconclusive")})
    _emit(report, s["out"], data)


def cmd_regions(s: dict, report: RunReport) -> None:
    regions = paramspace.sample_escape_regions(s["p"], s["level"], s["resolution"])
    report.metrics.update({"regions": len(regions), "ends": sum(r.multiplicity_estimate for r in regions),
                           "kneading": sorted(r.kneading for r in regions)})
    rows = [[r.id, r.kneading, r.multiplicity_estimate, r.consistent, len(r.samples)] for r in regions]
    _emit(report, s["out"], [r.to_json() for r in regions],
          ["id", "kneading", "multiplicity", "consistent", "samples"], rows)


def cmd_param_ray(s: dict, report: RunReport) -> None:
    regions = paramspace.sample_escape_regions(s["p"], s["level"], s["resolution"])
    matches = [r for r in regions if r.kneading == s["kneading"]] if s["kneading"] else regions
    if not matches:
        raise InvalidInput(f"no escape region with kneading {s['kneading']!r}")
    if not 0 <= s["region"] < len(matches):
        raise InvalidInput(f"region index must be below {len(matches)}")
    region = matches[s["region"]]
    theta = parse_angle(s["theta"])
    seed = paramspace.region_ray_seed(region, theta, s["branch"])
    trace = paramspace.trace_parameter_ray(s["p"], seed, theta, s["level_floor"])
    data = {"region": region.id, "kneading": region.kneading, "trace": trace.to_json()}
    report.metrics.update({"samples": len(trace.samples), "complete": trace.complete, "reason": trace.reason})
    if s["land"]:
        est = paramspace.landing_estimate(trace, theta)
        data["landing"] = est.to_json()
        report.metrics["landing"] = est.to_json()
    rows = [[repr(f.a.real), repr(f.a.imag), repr(f.v.real), repr(f.v.imag), repr(lv)] for f, lv in trace.samples]
    _emit(report, s["out"], data, ["a_re", "a_im", "v_re", "v_im", "level"], rows)


def cmd_classify(s: dict, report: RunReport) -> None:
    a = parse_complex(s["a"])
    if s["v"] is None:
        roots = curve.fiber(a, s["p"]).roots
        if not 0 <= s["sheet"] < len(roots):
            raise InvalidInput(f"sheet index must be below {len(roots)}")
        v = complex(roots[s["sheet"]])
    else:
        v = parse_complex(s["v"])
        res = float(curve.period_residuals(a, [v], s["p"])[0])
        if res > ON_CURVE_TOL * (1 + abs(v)):
            raise InvalidInput(f"(a, v) is not on the period-{s['p']} curve (residual {res:.3g})")
    f = CubicMap(a, v, s["p"])
    typ = paramspace.classify_hyperbolic(f)
    data = {"a": _cplx(f.a), "v": _cplx(f.v), "p": f.p, **typ.to_json()}
    if typ.tag in ("A", "B", "C"):
        data["phi_H"] = _cplx(paramspace.phi_H(f, typ.k))
    report.metrics["tag"] = typ.tag
    _emit(report, s["out"], data)


def cmd_verify(s: dict, report: RunReport) -> None:
    suite = s["suite"]
    if suite not in acceptance.SUITES:
        raise InvalidInput(f"unknown suite {suite!r}; choose from {sorted(acceptance.SUITES)}")

    def progress(res: acceptance.CriterionResult) -> None:
        print(res.line(), file=sys.stderr, flush=True)

    results = acceptance.run_suite(suite, progress)
    report.metrics["criteria"] = [r.to_json() for r in results]
    if s["out"]:
        _write_json(s["out"], report.metrics["criteria"])
        report.artifacts.append(s["out"])
    if not all(r.passed for r in results):
        raise VerificationFailed(report.metrics)


# --- parser -----------------------------------------------------------------------------------

# (flags, argparse kwargs, default); a default of None means "optional and unset"
Option = tuple[tuple[str, ...], dict, Any]

_OUT: Option = (("--out",), {"help": "write the result to a .json or .csv file"}, None)
_MAP: list[Option] = [(("--a",), {"help": "marked critical point a"}, "0"),
                      (("--v",), {"help": "critical value v = f(a)"}, "0"),
                      (("--p",), {"type": int, "help": "period of a"}, 1)]
_RENDER: list[Option] = [
    (("--center",), {}, "0"), (("--width",), {"type": float}, 4.0), (("--pixels",), {"help": "WxH"}, "256x256"),
    (("--max-iter",), {"type": int}, 200), (("--palette",), {"choices": sorted(render.PALETTES)}, "standard"),
    (("--max-pixels",), {"type": int}, None), (("--no-collisions",), {"action": "store_true"}, False),
    (("--png",), {"help": "output image"}, "render.png"), (("--json",), {"help": "metadata sidecar"}, None),
    (("--from-png",), {"help": "re-render from a PNG's embedded config"}, None),
    (("--a",), {"help": "seed map a"}, None), (("--v",), {"help": "seed map v"}, None),
]

COMMANDS: dict[str, tuple[Callable, str, list[Option]]] = {
    "angle": (cmd_angle, "classify a rational angle under tripling", [
        (("theta",), {"help": "angle such as 1/24"}, None),
        (("--orbit",), {"type": int, "help": "orbit and itinerary length"}, 6),
        (("--partition",), {"help": "theta of the partition used for itineraries"}, None),
        (("--ell",), {"type": int, "help": "also report alpha_ell and beta_ell"}, None), _OUT]),
    "knead": (cmd_knead, "moves and return times of a kneading word", [
        (("word",), {"nargs": "?"}, None),
        (("--verify-moves",), {"type": int, "metavar": "P", "help": "exhaustive move check"}, None), _OUT]),
    "ray": (cmd_ray, "trace a dynamical external ray", _MAP + [
        (("--theta",), {}, "0"), (("--g-floor",), {"type": float}, 1e-6),
        (("--land",), {"action": "store_true"}, False), _OUT]),
    "render-dyn": (_cmd_render("dynamical"), "render a dynamical plane",
                   _RENDER + [(("--p",), {"type": int}, 1)]),
    "render-param": (_cmd_render("parameter_a_slice"), "render a slice of the curve over the a-plane",
                     _RENDER + [(("--p",), {"type": int}, 2), (("--sheet",), {}, 0)]),
    "curve-fiber": (cmd_curve_fiber, "roots of Phi_p(a, .)", [
        (("--a",), {}, "1.3+0.1j"), (("--p",), {"type": int}, 2), _OUT]),
    "curve-branch": (cmd_curve_branch, "branch points of the projection to a", [
        (("--p",), {"type": int}, 2), (("--radius",), {"type": float}, 2.0), _OUT]),
    "curve-monodromy": (cmd_curve_monodromy, "monodromy of the projection to a", [
        (("--p",), {"type": int}, 2), (("--basepoint",), {}, "1.3+0.1j"),
        (("--radius-scale",), {"type": float}, 1.0), _OUT]),
    "regions": (cmd_regions, "enumerate escape regions", [
        (("--p",), {"type": int}, 3), (("--level",), {"type": float}, 0.5),
        (("--resolution",), {"type": int}, 8), _OUT]),
    "param-ray": (cmd_param_ray, "trace a parameter ray in an escape region", [
        (("--p",), {"type": int}, 2), (("--kneading",), {}, None), (("--region",), {"type": int}, 0),
        (("--branch",), {"type": int}, 0), (("--theta",), {}, "0"),
        (("--level",), {"type": float}, 0.5), (("--resolution",), {"type": int}, 8),
        (("--level-floor",), {"type": float}, 1e-140), (("--land",), {"action": "store_true"}, False), _OUT]),
    "classify": (cmd_classify, "hyperbolic type of a map on the curve", [
        (("--a",), {}, "0"), (("--v",), {"help": "defaults to the fiber point picked by --sheet"}, None),
        (("--p",), {"type": int}, 2), (("--sheet",), {"type": int}, 0), _OUT]),
    "verify": (cmd_verify, "run acceptance checks", [
        (("suite",), {"help": f"one of {', '.join(acceptance.SUITES)}"}, None), _OUT]),
}


def _dest(flags: tuple[str, ...]) -> str:
    return flags[0].lstrip("-").replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="periodic-cubics", description="Cubic maps with a periodic critical point.")
    parser.add_argument("--config", help="JSON file of option values")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_, options) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        for flags, kw, _default in options:
            kw = dict(kw)
            if flags[0].startswith("-"):
                # None marks "not given" so the config file can fill it in
                kw["default"] = None
            elif kw.get("nargs") != "?":
                kw["nargs"] = "?"
            sp.add_argument(*flags, **kw)
    return parser


def _load_config(path: Optional[str], command: str) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise InvalidInput("config must be a JSON object")
    out = {k: v for k, v in raw.items() if k not in COMMANDS}
    section = raw.get(command, {})
    if not isinstance(section, dict):
        raise InvalidInput(f"config section {command!r} must be an object")
    out.update(section)
    return out


def resolve_settings(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit options."""
    options = COMMANDS[args.command][2]
    settings = {_dest(flags): default for flags, _, default in options}
    file_values = _load_config(args.config, args.command)
    unknown = set(file_values) - set(settings)
    if unknown:
        raise InvalidInput(f"unknown config keys for {args.command}: {sorted(unknown)}")
    settings.update(file_values)
    for key in settings:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            settings[key] = value
    return settings


def run(argv: Optional[Sequence[str]] = None) -> RunReport:
    report = RunReport(command="")
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        report.command = args.command
        settings = resolve_settings(args)
        COMMANDS[args.command][0](settings, report)
    except InvalidInput as exc:
        report.status, report.metrics["error"] = "invalid_input", str(exc)
    except VerificationFailed:
        report.status = "verification_failed"
    except NumericalError as exc:
        report.status, report.metrics["error"] = "numerical_error", str(exc)
    except (DomainError, ConfigurationError, ValueError, KeyError, TypeError, OSError) as exc:
        report.status, report.metrics["error"] = "invalid_input", f"{type(exc).__name__}: {exc}"
    except (ArithmeticError, MemoryError) as exc:
        report.status, report.metrics["error"] = "numerical_error", f"{type(exc).__name__}: {exc}"
    report.metrics.setdefault("seconds", time.perf_counter() - t0)
    return report


def main(argv: Optional[Sequence[str]] = None) -> int:
    report = run(argv)
    json.dump(report.to_json(), sys.stdout, indent=2, default=str)
    sys.stdout.write("\n")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
