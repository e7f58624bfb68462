"""Command-line front end.

Every subcommand reads a single JSON config (``--config``); flags override the
sampler count, seed and tolerance.  Exit codes: 0 success, 1 check failure or
degenerate input, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import metadata as importlib_metadata

import numpy as np

from . import metrics, product
from .classify import DEFAULT_TOLERANCE, PRODUCT_CHECKS, classify, verify_product
from .errors import ConfigError, FinslerError
from .mexpr import ExprSyntaxError, UnboundVariable, UnknownIdentifier, ArityError
from .product import ProductMetric, minkowski_product
from .sampling import SamplePoint, SamplerConfig
from .tensors import TensorFrame, compute_frame

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

TOP_KEYS = {"metric", "sampler", "tolerances", "output", "reversibility", "point"}
SAMPLER_KEYS = {"count", "seed", "x_box", "y_mode", "f_min", "k_min", "h_min", "max_rejections"}
# tolerance names outside the product checks
GENERAL_TOLERANCES = {"classification", "validation"}

METRIC_KEYS = {
    "euclidean": ({"dim"}, {"name"}),
    "sphere": (set(), {"name"}),
    "riemannian": ({"g"}, {"name", "domain", "dim"}),
    "randers": ({"b"}, {"a", "name", "domain", "dim"}),
    "mroot": ({"dim"}, {"r", "coefficients", "name"}),
    "custom": ({"G", "dim"}, {"name", "domain"}),
    "product": ({"factor1", "factor2", "f"}, {"name"}),
}
FUNCTION_KEYS = {
    "sum": (set(), set()),
    "pnorm": (set(), {"p"}),
    "eps_sqrt": (set(), {"eps"}),
    "custom": ({"expr"}, set()),
}

TENSOR_LABELS = {
    "G_lower": "G_{ab}",
    "G_upper": "G^{ab}",
    "spray": "G^a",
    "nconn": "Gamma^a_b",
    "cartan_h": "Gamma^a_{b;c}",
    "cartan_v": "Gamma^a_{bc}",
    "berwald_conn": "Gamma^a_{b;c} (Berwald)",
    "berwald_curv": "B^a_{bcd}",
    "mean_berwald": "E_{ab}",
    "landsberg": "L_{abc}",
    "mean_landsberg": "J_a",
}


@dataclass
class RunConfig:
    metric: object
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"format": "json", "path": None})
    reversibility: str = "positive_only"
    point: SamplePoint | None = None


# --- config parsing -----------------------------------------------------------

def _check_keys(d, required, optional, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    missing = required - d.keys()
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    unknown = d.keys() - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _domain(d):
    dom = d.get("domain")
    if dom is None:
        return None
    try:
        return tuple((float(a), float(b)) for a, b in dom)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"domain must be a list of [lo, hi] pairs: {err}") from None


def build_function(d: dict) -> product.ProductFunction:
    kind = d.get("kind") if isinstance(d, dict) else None
    if kind not in FUNCTION_KEYS:
        raise ConfigError(f"unknown product function kind {kind!r}; expected one of {sorted(FUNCTION_KEYS)}")
    req, opt = FUNCTION_KEYS[kind]
    _check_keys(d, req | {"kind"}, opt, f"product function {kind!r}")
    if kind == "sum":
        return product.sum_function()
    if kind == "pnorm":
        return product.pnorm(int(d.get("p", 2)))
    if kind == "eps_sqrt":
        return product.eps_sqrt(float(d.get("eps", 0.5)))
    return product.custom_function(d["expr"])


def build_metric(d: dict, sampler: SamplerConfig | None = None, check_product: bool = True):
    """Metric (or product metric) from its JSON description."""
    kind = d.get("kind") if isinstance(d, dict) else None
    if kind not in METRIC_KEYS:
        raise ConfigError(f"unknown metric kind {kind!r}; expected one of {sorted(METRIC_KEYS)}")
    req, opt = METRIC_KEYS[kind]
    _check_keys(d, req | {"kind"}, opt, f"metric {kind!r}")
    name = d.get("name", "")
    if kind == "euclidean":
        return metrics.euclidean(int(d["dim"]), name)
    if kind == "sphere":
        return metrics.round_sphere(name or "sphere")
    if kind == "riemannian":
        return metrics.riemannian(d["g"], name, _domain(d))
    if kind == "randers":
        return metrics.randers(d["b"], d.get("a"), name, _domain(d))
    if kind == "mroot":
        return metrics.mroot(int(d["dim"]), int(d.get("r", 4)), d.get("coefficients"), name)
    if kind == "custom":
        return metrics.custom(d["G"], int(d["dim"]), name, _domain(d))
    f1 = build_metric(d["factor1"], sampler)
    f2 = build_metric(d["factor2"], sampler)
    return minkowski_product(f1, f2, build_function(d["f"]), sampler, check=check_product, name=name)


def build_sampler(d: dict | None) -> SamplerConfig:
    if d is None:
        return SamplerConfig()
    _check_keys(d, set(), SAMPLER_KEYS, "sampler")
    try:
        return SamplerConfig(**d)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"sampler: {err}") from None


def parse_config(doc: dict, sampler_overrides: dict | None = None, check_product: bool = True) -> RunConfig:
    """RunConfig from a parsed JSON document; unknown keys are rejected."""
    _check_keys(doc, {"metric"}, TOP_KEYS - {"metric"}, "config")
    sampler = build_sampler(doc.get("sampler"))
    if sampler_overrides:
        try:
            sampler = replace(sampler, **sampler_overrides)
        except ValueError as err:
            raise ConfigError(f"sampler: {err}") from None

    tolerances = doc.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ConfigError("tolerances must be a JSON object")
    known = GENERAL_TOLERANCES | {c.name for c in PRODUCT_CHECKS}
    for k, v in tolerances.items():
        if k not in known:
            raise ConfigError(f"tolerances: unknown check {k!r}")
        if not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"tolerances: {k} must be a positive number")

    output = {"format": "json", "path": None}
    if "output" in doc:
        _check_keys(doc["output"], set(), {"format", "path"}, "output")
        output.update(doc["output"])
    if output["format"] not in ("json", "csv"):
        raise ConfigError("output.format must be 'json' or 'csv'")

    reversibility = doc.get("reversibility", "positive_only")
    if reversibility not in ("positive_only", "required"):
        raise ConfigError("reversibility must be 'positive_only' or 'required'")

    point = None
    if "point" in doc:
        _check_keys(doc["point"], {"x", "y"}, set(), "point")
        try:
            point = SamplePoint(doc["point"]["x"], doc["point"]["y"])
        except (TypeError, ValueError) as err:
            raise ConfigError(f"point: {err}") from None

    try:
        metric = build_metric(doc["metric"], sampler, check_product)
    except (ExprSyntaxError, UnknownIdentifier, ArityError, UnboundVariable) as err:
        raise ConfigError(f"metric expression: {err}") from None
    except (TypeError, KeyError) as err:
        raise ConfigError(f"metric: {err}") from None
    return RunConfig(metric, sampler, dict(tolerances), output, reversibility, point)


def load_config(path: str, sampler_overrides: dict | None = None, check_product: bool = True) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    return parse_config(doc, sampler_overrides, check_product)


# --- serialization ------------------------------------------------------------

def _plain(obj):
    """JSON-safe copy: numpy to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def _num(v) -> str:
    """Shortest round-trip text of a number, as JSON writes it."""
    v = _plain(v)
    return v if isinstance(v, str) else json.dumps(v)


def to_json(body: dict, command: str) -> str:
    """Report JSON; the ``metadata`` block is the only non-deterministic part."""
    try:
        version = importlib_metadata.version("artifact")
    except importlib_metadata.PackageNotFoundError:
        version = "unknown"
    doc = {
        **_plain(body),
        "metadata": {
            "command": command,
            "version": version,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_num(r[c]) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])
    return buf.getvalue()


def frame_body(fr: TensorFrame, metric_name: str) -> dict:
    tensors = {}
    for name in TensorFrame.TENSORS:
        arr = getattr(fr, name)
        tensors[name] = {"label": TENSOR_LABELS[name], "shape": list(arr.shape), "data": arr.tolist()}
    return {"metric": metric_name, "at": fr.at.as_dict(), "G": fr.G_val, "tensors": tensors}


def frame_rows(fr: TensorFrame) -> list[dict]:
    rows = [{"tensor": "G", "index": "", "value": fr.G_val}]
    for name in TensorFrame.TENSORS:
        arr = getattr(fr, name)
        for idx in np.ndindex(arr.shape):
            rows.append({"tensor": name, "index": ",".join(map(str, idx)), "value": float(arr[idx])})
    return rows


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, path: str | None) -> None:
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


# --- catalog ------------------------------------------------------------------

def catalog() -> str:
    entries = [
        ("euclidean", {"kind": "euclidean", "dim": 2}, metrics.euclidean(2)),
        ("sphere", {"kind": "sphere"}, metrics.round_sphere()),
        ("riemannian", {"kind": "riemannian", "g": [["1", "0"], ["0", "exp(2*x1)"]]},
         metrics.riemannian([["1", "0"], ["0", "exp(2*x1)"]])),
        ("randers", {"kind": "randers", "b": ["0", "0.3*sin(x1)"]}, metrics.randers(["0", "0.3*sin(x1)"])),
        ("mroot", {"kind": "mroot", "dim": 2, "r": 4}, metrics.mroot(2, 4)),
        ("custom", {"kind": "custom", "dim": 2, "G": "y1^2 + y1*y2 + y2^2"},
         metrics.custom("y1^2 + y1*y2 + y2^2", 2)),
    ]
    functions = [
        ({"kind": "sum"}, product.sum_function()),
        ({"kind": "pnorm", "p": 2}, product.pnorm(2)),
        ({"kind": "eps_sqrt", "eps": 0.5}, product.eps_sqrt(0.5)),
        ({"kind": "custom", "expr": "s + t + sqrt(s*t)"}, product.custom_function("s + t + sqrt(s*t)")),
    ]
    lines = ["Metrics (expression for G = F^2 in x1.., y1..):"]
    for label, cfg, m in entries:
        lines.append(f"  {label:<11} {json.dumps(cfg)}")
        lines.append(f"  {'':<11} G = {m.text}")
    lines.append("")
    lines.append("Product functions f(s, t), with s = F1^2 and t = F2^2:")
    for cfg, f in functions:
        lines.append(f"  {f.kind:<11} {json.dumps(cfg)}")
        lines.append(f"  {'':<11} f = {f.text}")
    lines.append("")
    lines.append('Product metric: {"kind": "product", "factor1": {...}, "factor2": {...}, "f": {...}}')
    return "\n".join(lines) + "\n"


# --- commands -----------------------------------------------------------------

def _csv_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _output(args, cfg: RunConfig) -> tuple[str, str | None]:
    fmt = args.format or cfg.output["format"]
    return fmt, args.out or cfg.output.get("path")


def cmd_validate(args, cfg: RunConfig) -> int:
    tol = args.tol or cfg.tolerances.get("validation", 1e-10)
    rep = metrics.validate(cfg.metric, cfg.sampler, tol, cfg.reversibility)
    fmt, path = _output(args, cfg)
    if fmt == "csv":
        emit(rows_to_csv(rep.rows, ["check", "sample", "residual"]), path)
    else:
        emit(to_json(rep.as_dict(), "validate"), path)
    if not rep.passed:
        failed = sorted({f["check"] for f in rep.failures})
        print(f"validation failed: {', '.join(failed)} ({len(rep.failures)} failures)", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_tensors(args, cfg: RunConfig) -> int:
    if args.x is not None or args.y is not None:
        if args.x is None or args.y is None:
            raise ConfigError("--x and --y must be given together")
        try:
            point = SamplePoint(args.x, args.y)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    elif cfg.point is not None:
        point = cfg.point
    else:
        raise ConfigError("tensors needs a point: --x/--y or a 'point' entry in the config")
    if point.dim != cfg.metric.dim:
        raise ConfigError(f"point has dimension {point.dim}, metric has dimension {cfg.metric.dim}")
    fr = compute_frame(cfg.metric, point)
    fmt, path = _output(args, cfg)
    if fmt == "csv":
        emit(rows_to_csv(frame_rows(fr), ["tensor", "index", "value"]), path)
    else:
        emit(to_json(frame_body(fr, cfg.metric.name), "tensors"), path)
    return EXIT_OK


def cmd_classify(args, cfg: RunConfig) -> int:
    tol = args.tol or cfg.tolerances.get("classification", DEFAULT_TOLERANCE)
    rep = classify(cfg.metric, cfg.sampler, tol)
    fmt, path = _output(args, cfg)
    if fmt == "csv":
        emit(rows_to_csv(rep.rows, ["check", "sample", "residual"]), path)
    else:
        emit(to_json(rep.as_dict(), "classify"), path)
    return EXIT_OK


def cmd_verify_product(args, cfg: RunConfig) -> int:
    if not isinstance(cfg.metric, ProductMetric):
        raise ConfigError("verify-product needs a metric of kind 'product'")
    tol = args.tol or cfg.tolerances.get("classification", DEFAULT_TOLERANCE)
    per_check = {k: v for k, v in cfg.tolerances.items() if k not in GENERAL_TOLERANCES}
    rep = verify_product(cfg.metric, cfg.sampler, tol, per_check)
    fmt, path = _output(args, cfg)
    if fmt == "csv":
        emit(rows_to_csv(rep.rows, ["check", "name", "sample", "residual"]), path)
    else:
        emit(to_json(rep.as_dict(), "verify-product"), path)
    if not rep.passed:
        failed = [c["name"] for c in rep.checks if not c["passed"]]
        print(f"checks failed: {', '.join(failed)}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


COMMANDS = {
    "validate": cmd_validate,
    "tensors": cmd_tensors,
    "classify": cmd_classify,
    "verify-product": cmd_verify_product,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finsler-product",
        description="Finsler metrics, Minkowskian products and their curvature classification.",
    )
    parser.add_argument("--catalog", action="store_true",
                        help="list builtin metrics and product functions with their expansions")
    sub = parser.add_subparsers(dest="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override sampler seed")
    common.add_argument("--samples", type=int, help="override sample count")
    common.add_argument("--tol", type=float, help="override the command tolerance")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default from config, else json)")
    common.add_argument("--out", help="output path (default: stdout)")

    sub.add_parser("validate", parents=[common], help="check the Finsler axioms on samples")
    p = sub.add_parser("tensors", parents=[common], help="all tensors at one point")
    p.add_argument("--x", type=_csv_list, help="base point, comma separated")
    p.add_argument("--y", type=_csv_list, help="tangent vector, comma separated")
    sub.add_parser("classify", parents=[common], help="Berwald / Landsberg classification")
    sub.add_parser("verify-product", parents=[common], help="block-structure and theorem checks for a product")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.catalog:
        sys.stdout.write(catalog())
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.tol is not None and not args.tol > 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_USAGE

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.samples is not None:
        overrides["count"] = args.samples
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except product.InvalidFactor as err:
        print(f"invalid metric: {err}", file=sys.stderr)
        return EXIT_FAIL
    except FinslerError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
