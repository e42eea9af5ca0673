"""Command-line entry point: ``sidex <subcommand> ...``.

Every artifact starts with a header recording the tool version, a hash of the
effective configuration and the output unit.  CSV files carry it as a ``#``
comment line; JSON files carry it under the ``"_header"`` key.  Numbers are
printed with ``repr`` so reruns with the same configuration are byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from . import erasure, gaussian, sccsi, simulator, wz
from .info import LN2, BudgetError, GridSpec, JointDist, fmt_ext, joint_from_obj

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_BUDGET = 0, 2, 3, 4

BITS_MODULES = {"sccsi", "wz", "be-fig2", "be-fig3", "functional", "simulate"}
NATS_MODULES = {"gauss-fig4", "gauss-fig5"}


class UsageError(ValueError):
    pass


class ValidationFailure(RuntimeError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


# ---------------------------------------------------------------- formatting

def _num(v: float) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return fmt_ext(float(v))
    return v


def config_hash(cfg: dict) -> str:
    text = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _header(cfg: dict, unit: str) -> dict:
    return {"tool": "sidex", "version": __version__, "config_hash": config_hash(cfg), "unit": unit}


def render_csv(cfg: dict, unit: str, columns: list[str], rows: list[list]) -> str:
    h = _header(cfg, unit)
    lines = [f"# sidex {h['version']} config_hash={h['config_hash']} unit={unit}", ",".join(columns)]
    for r in rows:
        lines.append(",".join(_num(v) if isinstance(v, (float, np.floating)) else str(v) for v in r))
    return "\n".join(lines) + "\n"


def render_json(cfg: dict, unit: str, body: dict) -> str:
    doc = {"_header": _header(cfg, unit), "config": _jsonable(cfg)}
    doc.update(_jsonable(body))
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- argument helpers

def _load_json(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e.msg}") from None
    if not isinstance(obj, dict):
        raise UsageError(f"{path} must hold a JSON object")
    return obj


def _parse_grid(items: list[str]) -> dict:
    out = {}
    for it in items or []:
        if "=" not in it:
            raise UsageError(f"grid override '{it}' must look like key=value")
        k, v = it.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            raise UsageError(f"grid override '{it}' has a non-numeric value") from None
    return out


def _apply(cls, overrides: dict, base=None):
    base = base if base is not None else cls()
    names = {f.name for f in dataclasses.fields(cls)}
    bad = sorted(set(overrides) - names)
    if bad:
        raise UsageError(f"unknown grid keys for {cls.__name__}: {', '.join(bad)}")
    try:
        return dataclasses.replace(base, **overrides)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from None


def _parse_range(text: str) -> list[int]:
    """'6..12' (step 2 when both ends are even), '6..12:1', or '6,8,10'."""
    try:
        if ".." in text:
            span, _, step = text.partition(":")
            a, b = (int(s) for s in span.split(".."))
            st = int(step) if step else (2 if a % 2 == 0 and b % 2 == 0 else 1)
            vals = list(range(a, b + 1, st))
        else:
            vals = [int(s) for s in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse blocklength list '{text}'") from None
    if not vals or min(vals) < 1:
        raise UsageError("blocklengths must be positive")
    return vals


def _parse_floats(text: str) -> list[float]:
    """'a:b:step' inclusive, or a comma list."""
    try:
        if text.count(":") == 2:
            a, b, st = (float(s) for s in text.split(":"))
            k = int(round((b - a) / st))
            return [round(a + i * st, 12) for i in range(k + 1)]
        return [float(s) for s in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse number list '{text}'") from None


def _scale(unit: str, native: str) -> float:
    if unit == native:
        return 1.0
    return LN2 if native == "bits" else 1.0 / LN2


# ---------------------------------------------------------------- subcommands

def _cmd_sccsi(a, cfg: dict) -> tuple[str, str]:
    prob = sccsi.SccsiProblem.from_obj(cfg["problem"])
    grid = _apply(GridSpec, cfg["grid"])
    fns = {"lower": sccsi.eta_lower, "upper": sccsi.eta_upper, "sp": sccsi.eta_sp}
    wanted = list(fns) if a.bound == "all" else [a.bound]
    k = _scale(a.unit, "bits")
    body = {}
    for name in wanted:
        if name != "lower" and np.any(prob.p_xy <= 0):
            body[f"eta_{name}"] = {"value": "inf", "skipped": "requires a strictly positive P_XY"}
            continue
        rep = fns[name](prob, grid)
        obj = rep.to_obj()
        obj["value"] = fmt_ext(rep.value * k)
        body[f"eta_{name}"] = obj
    return "json", render_json(cfg, a.unit, body)


def _cmd_wz(a, cfg: dict) -> tuple[str, str]:
    prob = wz.WzProblem.from_obj(cfg["problem"])
    base = GridSpec(resolution=8, cond_resolution=4)
    grid = _apply(GridSpec, cfg["grid"], base)
    k = _scale(a.unit, "bits")
    body = {}
    if a.bound in ("lower", "all"):
        rep = wz.theta_lower(prob, grid)
        obj = rep.to_obj()
        obj["value"] = fmt_ext(rep.value * k)
        body["theta_lower"] = obj
    if a.bound in ("upper", "all"):
        rep = wz.theta_upper(prob, grid)
        obj = rep.to_obj()
        obj["value"] = fmt_ext(rep.value * k)
        body["theta_upper"] = obj
    body["rwz_bits"] = wz.rwz(prob.p_xy, prob.delta, prob.dist, grid, prob.z_size)
    return "json", render_json(cfg, a.unit, body)


def _cmd_functional(a, cfg: dict) -> tuple[str, str]:
    prob = wz.FunctionalProblem.from_obj(cfg["problem"])
    grid = _apply(GridSpec, cfg["grid"])
    res = wz.xi_exponents(prob, grid)
    k = _scale(a.unit, "bits")
    body = {"xi_lower": res.xi_lower * k, "xi_upper": res.xi_upper * k,
            "xi_lower_unconstrained": res.xi_lower_unconstrained * k,
            "witness_upper": res.witness_upper, "witness_unconstrained": res.witness_unconstrained}
    return "json", render_json(cfg, a.unit, body)


def _be_config(cfg: dict) -> erasure.BeConfig:
    p = cfg["problem"]
    inner = {k: v for k, v in cfg["grid"].items() if k != "dgrid"}
    over = {"dgrid": cfg["grid"]["dgrid"]} if "dgrid" in cfg["grid"] else {}
    if inner:
        raise UsageError(f"unknown grid keys for the erasure example: {', '.join(sorted(inner))}")
    try:
        return erasure.BeConfig(p=p["p"], delta_target=p["delta"], kappa=p["kappa"],
                                rate=p.get("rate", 0.425), **over)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _cmd_be_fig2(a, cfg: dict) -> tuple[str, str]:
    bc = _be_config(cfg)
    k = _scale(a.unit, "bits")
    _, _, curve = erasure.be_exponent(bc)
    u = "bits" if a.unit == "bits" else "nats"
    rows = [[c.delta, c.g1 * k, c.g2 * k] for c in curve]
    return "csv", render_csv(cfg, a.unit, ["delta", f"g1_{u}", f"g2_{u}"], rows)


def _cmd_be_fig3(a, cfg: dict) -> tuple[str, str]:
    bc = _be_config(cfg)
    k = _scale(a.unit, "bits")
    rows = []
    for r in cfg["problem"]["rates"]:
        c = dataclasses.replace(bc, rate=r)
        val = erasure.be_exponent(c)[0]
        rows.append([float(r), val * k, erasure.two_sided_exponent(r, c) * k])
    u = "bits" if a.unit == "bits" else "nats"
    return "csv", render_csv(cfg, a.unit, ["rate", f"exponent_{u}", f"two_sided_{u}"], rows)


def _gauss_problem(cfg: dict, rate: Optional[float] = None) -> gaussian.GaussProblem:
    p = cfg["problem"]
    grids = _apply(gaussian.GaussGrids, cfg["grid"])
    try:
        return gaussian.GaussProblem(p["zeta"], p["delta"], p["rate"] if rate is None else rate,
                                     p.get("m_lambda", 4.0), grids)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _cmd_gauss_fig4(a, cfg: dict) -> tuple[str, str]:
    prob = _gauss_problem(cfg)
    k = _scale(a.unit, "nats")
    rows = [[r, v * k] for r, v in gaussian.g3_profile(prob, cfg["problem"]["sigma_x2"])]
    u = "nats" if a.unit == "nats" else "bits"
    return "csv", render_csv(cfg, a.unit, ["rho_xz", f"g3_{u}"], rows)


def _cmd_gauss_fig5(a, cfg: dict) -> tuple[str, str]:
    k = _scale(a.unit, "nats")
    rows = []
    sig = gaussian.sigma(cfg["problem"]["zeta"])
    floor = gaussian.cond_rd(sig, cfg["problem"]["delta"])
    for r in cfg["problem"]["rates"]:
        prob = _gauss_problem(cfg, r)
        low = gaussian.theta_gauss_lower(prob).value
        up = gaussian.theta_gauss_upper(prob).value if r > floor else 0.0
        rows.append([float(r), low * k, up * k, gaussian.marton_gauss(r, prob.delta) * k])
    u = "nats" if a.unit == "nats" else "bits"
    return "csv", render_csv(cfg, a.unit, ["rate_" + u, f"lower_{u}", f"upper_{u}", f"no_si_{u}"], rows)


def _sccsi_picker(prob: dict, p_xy: np.ndarray, s_size: int):
    if "channel" in prob:
        return simulator.fixed_channel_picker(np.asarray(prob["channel"], dtype=float))
    rep = sccsi.eta_lower(sccsi.SccsiProblem(p_xy, prob["r1"], prob["r2"], s_size), GridSpec(8, 4, 0))
    return simulator.report_channel_picker(rep, "channel_s_given_y")


def _cmd_simulate(a, cfg: dict) -> tuple[str, str]:
    prob = cfg["problem"]
    p_xy = joint_from_obj(prob["p_xy"])
    stats = simulator.TrialStats()
    if a.scheme == "sccsi":
        s_size = int(prob.get("s_size", 2))
        picker = _sccsi_picker(prob, p_xy.probs, s_size)
        for n in cfg["n"]:
            src = simulator.SimSource(p_xy, n, cfg["seed"])
            code = simulator.build_sccsi_code(src, prob["r1"], prob["r2"], picker, s_size)
            stats.rows += simulator.run_sccsi_trials(src, code, cfg["trials"]).rows
    else:
        dist = np.asarray(prob["dist"], dtype=float)
        z_size = prob.get("z_size")
        picker = (simulator.fixed_channel_picker(np.asarray(prob["channel"], dtype=float))
                  if "channel" in prob else simulator.uniform_channel_picker)
        f_pick = simulator.constant_f_picker(np.asarray(prob["f"])) if "f" in prob else None
        for n in cfg["n"]:
            src = simulator.SimSource(p_xy, n, cfg["seed"])
            code = simulator.build_wz_code(src, prob["rate"], prob["delta"], dist, picker, f_pick, z_size)
            stats.rows += simulator.run_wz_trials(src, code, cfg["trials"]).rows
    body = stats.csv().splitlines()
    rows = [line.split(",") for line in body[1:]]
    return "csv", render_csv(cfg, a.unit, body[0].split(","), rows)


# ---------------------------------------------------------------- validation

def validate_obj(obj: dict, request: tuple[str, ...] = ()) -> list[str]:
    """Named invariant violations of a problem file; empty when the file is sound."""
    problems: list[str] = []
    p = None
    if "p_xy" in obj:
        raw = obj["p_xy"]
        arr = np.asarray(raw["probs"] if isinstance(raw, dict) else raw, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            problems.append("p_xy: negative or non-finite entries")
        elif abs(arr.sum() - 1.0) > 1e-9:
            problems.append(f"p_xy: entries sum to {arr.sum():.12g}, not 1")
        else:
            p = arr
        if isinstance(raw, dict) and "axis_sizes" in raw and list(arr.shape) != list(raw["axis_sizes"]):
            problems.append("p_xy: axis_sizes do not match the probs array")
    for key in ("channel", "channel_s_given_y", "channel_z_given_x"):
        if key in obj:
            ch = np.asarray(obj[key], dtype=float)
            if ch.ndim != 2 or np.any(ch < 0) or not np.allclose(ch.sum(1), 1.0, atol=1e-9):
                problems.append(f"{key}: rows are not probability vectors")
    if "dist" in obj:
        d = np.asarray(obj["dist"], dtype=float)
        if d.ndim != 2 or not np.all(np.isfinite(d)) or np.any(d < 0):
            problems.append("dist: distortion table must be finite and non-negative")
        elif p is not None and d.shape[0] != p.shape[0]:
            problems.append("dist: needs one row per source symbol")
    for key in ("pi", "sigma", "k", "cov"):
        if key in obj:
            m = np.asarray(obj[key], dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.allclose(m, m.T, atol=1e-12):
                problems.append(f"{key}: covariance is not a symmetric square matrix")
            elif np.linalg.eigvalsh(m).min() < -gaussian.PSD_TOL:
                problems.append(f"{key}: covariance is not positive semidefinite")
    if "zeta" in obj and not -1 < float(obj["zeta"]) < 1:
        problems.append("zeta: correlation must lie strictly inside (-1, 1)")
    for key in ("r1", "r2", "rate", "delta"):
        if key in obj and float(obj[key]) < 0:
            problems.append(f"{key}: must be non-negative")
    req = set(request) | set(obj.get("request", []))
    if p is not None and req & {"eta_upper", "eta_sp"} and np.any(p <= 0):
        problems.append("eta_upper hypothesis violated: P_XY must be strictly positive")
    if req & {"theta_gauss_upper", "gauss-fig5"} and "zeta" in obj and "delta" in obj and "rate" in obj:
        z = float(obj["zeta"])
        if -1 < z < 1 and float(obj["rate"]) <= gaussian.cond_rd(gaussian.sigma(z), float(obj["delta"])):
            problems.append("theta_gauss_upper hypothesis violated: rate must exceed the conditional "
                            "rate-distortion function")
    return problems


def _cmd_validate(a, cfg: dict) -> tuple[str, str]:
    try:
        text = Path(a.file).read_text()
    except OSError as e:
        raise OSError(f"cannot read {a.file}: {e.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationFailure([f"not valid JSON: {e.msg}"]) from None
    problems = validate_obj(obj if isinstance(obj, dict) else {}, tuple(a.request or ()))
    if not isinstance(obj, dict):
        problems.insert(0, "top level must be a JSON object")
    body = {"file": str(a.file), "ok": not problems, "violations": problems}
    a.violations = problems
    return "json", render_json(cfg, a.unit, body)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sidex", description="Error exponents for source coding with side information.")
    ap.add_argument("--version", action="version", version=f"sidex {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(sp, unit: str, problem: bool = True):
        if problem:
            sp.add_argument("--config", help="JSON problem file")
        sp.add_argument("--grid", action="append", default=[], metavar="KEY=VALUE", help="grid override")
        sp.add_argument("--unit", choices=("bits", "nats"), default=unit)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="-", help="output path ('-' for stdout)")

    for name in ("sccsi", "wz"):
        sp = sub.add_parser(name)
        common(sp, "bits")
        sp.add_argument("--bound", choices=("lower", "upper", "sp", "all") if name == "sccsi" else ("lower", "upper", "all"),
                        default="all")
    common(sub.add_parser("functional"), "bits")

    for name in ("be-fig2", "be-fig3"):
        sp = sub.add_parser(name)
        common(sp, "bits")
        sp.add_argument("--p", type=float, default=0.5)
        sp.add_argument("--delta", type=float, default=0.15)
        sp.add_argument("--kappa", type=float, default=100.0)
        if name == "be-fig2":
            sp.add_argument("--rate", type=float, default=0.425)
        else:
            sp.add_argument("--rates", default="0.36:0.48:0.01")

    for name in ("gauss-fig4", "gauss-fig5"):
        sp = sub.add_parser(name)
        common(sp, "nats")
        sp.add_argument("--zeta", type=float, default=0.7)
        sp.add_argument("--delta", type=float, default=0.4)
        if name == "gauss-fig4":
            sp.add_argument("--rate", type=float, default=0.4)
            sp.add_argument("--sigma-x2", type=float, default=1.0)
        else:
            sp.add_argument("--rates", default="0.15:0.55:0.1")

    sp = sub.add_parser("simulate")
    sp.add_argument("scheme", choices=("sccsi", "wz"))
    common(sp, "bits")
    sp.add_argument("--n", default="6..12")
    sp.add_argument("--trials", type=int, default=10000)

    sp = sub.add_parser("validate")
    sp.add_argument("file")
    sp.add_argument("--request", action="append", help="bound the problem is meant for (e.g. eta_upper)")
    common(sp, "bits", problem=False)
    return ap


def _effective_config(a) -> dict:
    cfg: dict = {"subcommand": a.cmd, "unit": a.unit, "seed": a.seed, "grid": _parse_grid(a.grid)}
    file_cfg = _load_json(getattr(a, "config", None))
    if a.cmd in ("be-fig2", "be-fig3"):
        prob = {"p": a.p, "delta": a.delta, "kappa": a.kappa}
        if a.cmd == "be-fig2":
            prob["rate"] = a.rate
        else:
            prob["rates"] = _parse_floats(a.rates)
        prob.update(file_cfg)
        cfg["problem"] = prob
    elif a.cmd in ("gauss-fig4", "gauss-fig5"):
        prob = {"zeta": a.zeta, "delta": a.delta}
        if a.cmd == "gauss-fig4":
            prob.update(rate=a.rate, sigma_x2=a.sigma_x2)
        else:
            prob["rates"] = _parse_floats(a.rates)
        prob.update(file_cfg)
        cfg["problem"] = prob
    elif a.cmd == "validate":
        cfg["file"] = a.file
    else:
        if not file_cfg:
            raise UsageError(f"{a.cmd} needs --config with a JSON problem file")
        cfg["problem"] = file_cfg
    if a.cmd == "simulate":
        cfg.update(scheme=a.scheme, n=_parse_range(a.n), trials=a.trials)
        if a.trials < 1:
            raise UsageError("--trials must be >= 1")
    if hasattr(a, "bound"):
        cfg["bound"] = a.bound
    return cfg


COMMANDS = {"sccsi": _cmd_sccsi, "wz": _cmd_wz, "functional": _cmd_functional,
            "be-fig2": _cmd_be_fig2, "be-fig3": _cmd_be_fig3,
            "gauss-fig4": _cmd_gauss_fig4, "gauss-fig5": _cmd_gauss_fig5,
            "simulate": _cmd_simulate, "validate": _cmd_validate}


def _fail(code: int, kind: str, message: str, extra: Optional[dict] = None) -> int:
    rec = {"error": kind, "message": message, "exit": code}
    if extra:
        rec.update(extra)
    sys.stderr.write(json.dumps(rec, sort_keys=True) + "\n")
    return code


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = _effective_config(a)
        _, text = COMMANDS[a.cmd](a, cfg)
    except UsageError as e:
        return _fail(EXIT_USAGE, "usage", str(e))
    except ValidationFailure as e:
        return _fail(EXIT_VALIDATION, "validation", str(e), {"violations": e.problems})
    except BudgetError as e:
        return _fail(EXIT_BUDGET, "budget", str(e))
    except (KeyError, TypeError, ValueError) as e:
        return _fail(EXIT_USAGE, "usage", f"bad configuration: {e}")
    except OSError as e:
        return _fail(EXIT_USAGE, "io", str(e))
    if a.out == "-":
        sys.stdout.write(text)
    else:
        Path(a.out).write_text(text)
    if getattr(a, "violations", None):
        return _fail(EXIT_VALIDATION, "validation", "; ".join(a.violations), {"violations": a.violations})
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
