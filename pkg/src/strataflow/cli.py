"""Command-line entry point.

Five subcommands wire the library into reproducible batch runs driven by a
JSON config:

  relations          derive a relation set, verify associativity/symmetry
  verify-cohomology  pairing identity, boundary property, Poisson ideal
  simulate           integrate one of the derived systems, write snapshots
  hirota             bilinear-equation residuals on built-in or CSV input
  cocycle-trace      blow-up trace of the solution-borne pairings

Every command writes a resolved-config JSON (all defaults made explicit)
next to its outputs; identical configs give byte-identical outputs.  Exit
codes: 0 success, 1 config/precondition error, 2 verification or analysis
failure, 3 gradient catastrophe before the first snapshot.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import cohomology, flows, geometry, numerics, strata
from .exactalg import u_symbol
from .numerics import (
    CatastropheSignal,
    Field1D,
    Grid1D,
    NoBlowupDetectedError,
    PastCatastropheError,
    ShapeMismatchError,
    VacuumStateError,
)
from .strata import InconsistentTruncationError, StratumSpec, WindowExceededError


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config plumbing


def _load_config(path: str, overrides) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses a non-object")
        node[parts[-1]] = value
    return cfg


def _require(cfg: dict, key: str, types, default=None, choices=None):
    if key in cfg:
        value = cfg[key]
    elif default is not None or default == 0:
        value = default
    else:
        raise ConfigError(f"missing required key {key!r}")
    if not isinstance(value, types):
        raise ConfigError(f"key {key!r} must be of type {types}")
    if choices is not None and value not in choices:
        raise ConfigError(f"key {key!r} must be one of {sorted(choices)}")
    return value


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n",
                    encoding="utf-8")


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_snapshot_csv(path: Path, t: float, x: np.ndarray, columns: dict) -> None:
    lines = [f"# t={_fmt(t)}", "x," + ",".join(columns)]
    arrays = list(columns.values())
    for i in range(len(x)):
        lines.append(",".join([_fmt(x[i])] + [_fmt(a[i]) for a in arrays]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_trace_csv(path: Path, header: list, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# initial-data expressions: affine combinations of four primitives


_ALLOWED_FUNCS = {"const", "sin", "gauss", "poly"}


def _eval_initial(expr: str, x: np.ndarray) -> np.ndarray:
    """Evaluate an initial-data expression on the grid.

    Grammar: numbers, const(c), sin(freq, phase), gauss(center, width),
    poly(c0, c1, ...), combined with +, -, and scalar *.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad initial-data expression {expr!r}: {exc}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = ev(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult)):
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(left, np.ndarray) and isinstance(right, np.ndarray):
                raise ConfigError("only scalar * field products are allowed")
            return left * right
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            name = node.func.id
            if name not in _ALLOWED_FUNCS:
                raise ConfigError(f"unknown primitive {name!r}")
            args = [ev(a) for a in node.args]
            if any(isinstance(a, np.ndarray) for a in args):
                raise ConfigError("primitive arguments must be scalars")
            if name == "const":
                return float(args[0]) * np.ones_like(x)
            if name == "sin":
                freq = args[0] if args else 1.0
                phase = args[1] if len(args) > 1 else 0.0
                return np.sin(freq * x + phase)
            if name == "gauss":
                center = args[0] if args else 0.0
                width = args[1] if len(args) > 1 else 1.0
                return np.exp(-((x - center) / width) ** 2)
            if name == "poly":
                out = np.zeros_like(x)
                for i, c in enumerate(args):
                    out = out + float(c) * x ** i
                return out
        raise ConfigError(f"unsupported syntax in initial-data expression {expr!r}")

    result = ev(tree)
    if not isinstance(result, np.ndarray):
        result = float(result) * np.ones_like(x)
    return result


def _grid_from_config(cfg: dict) -> Grid1D:
    gcfg = _require(cfg, "grid", dict, default={})
    x0 = float(_require(gcfg, "x0", (int, float), default=0.0))
    length = float(_require(gcfg, "length", (int, float), default=2 * math.pi))
    n = _require(gcfg, "n", int, default=512)
    boundary = _require(gcfg, "boundary", str, default="periodic",
                        choices={"periodic", "extrapolate"})
    if n < 8:
        raise ConfigError("grid.n must be at least 8")
    return Grid1D(x0, length / n, n, boundary)


# ---------------------------------------------------------------------------
# commands


def cmd_relations(cfg: dict, out: Path) -> int:
    genus = _require(cfg, "genus", int, default=1)
    if genus not in (0, 1, 2, 3):
        raise ConfigError("genus must be one of 0, 1, 2, 3")
    window = _require(cfg, "window", int, default=6 * genus + 7)
    depth = cfg.get("depth")
    assoc_max = _require(cfg, "assoc_max_index", int, default=min(window, 9))
    seed = _require(cfg, "seed", int, default=0)
    resolved = {"command": "relations", "genus": genus, "window": window,
                "depth": depth, "assoc_max_index": assoc_max, "seed": seed}
    _write_json(out / "resolved_config.json", resolved)

    spec = StratumSpec(genus, window=window, depth=depth)
    rs = strata.derive_relations(spec)
    _write_json(out / "relations.json", rs.to_json())

    table = strata.structure_constants(spec, rs)
    reports = {
        "generators": len(rs.generators),
        "residual_relations": [p.canonical_str() for p in rs.residual_relations],
        "expansion_residuals": table.expansion_residuals,
        "associativity": strata.associativity_suite(genus, assoc_max).to_json(),
    }
    if genus == 0:
        reports["index_symmetry"] = strata.symmetry_check_g0(rs, window).to_json()
    # seeded confluence spot-check of the reduction
    rng = np.random.default_rng(seed)
    solved_names = sorted(rs.solved)
    confluence_failures = 0
    for _ in range(min(100, 4 * len(solved_names))):
        pick = [solved_names[rng.integers(0, len(solved_names))] for _ in range(2)]
        from .exactalg import MultiPoly
        a, b = (MultiPoly.var(p) for p in pick)
        lhs = rs.reduce(a * b)
        rhs = rs.reduce(rs.reduce(a) * rs.reduce(b))
        if not (lhs - rhs).is_zero:
            confluence_failures += 1
    reports["reduce_confluence_failures"] = confluence_failures
    _write_json(out / "verification_report.json", reports)

    ok = (not rs.residual_relations and not table.expansion_residuals
          and reports["associativity"]["ok"] and confluence_failures == 0
          and reports.get("index_symmetry", {}).get("ok", True))
    return 0 if ok else 2


def cmd_verify_cohomology(cfg: dict, out: Path) -> int:
    genus = _require(cfg, "genus", int, default=1)
    window = _require(cfg, "window", int, default=6 * genus + 7)
    triples_max = _require(cfg, "triples_max_index", int, default=7)
    coiso_window = _require(cfg, "coisotropy_window", int, default=2)
    resolved = {"command": "verify-cohomology", "genus": genus, "window": window,
                "triples_max_index": triples_max, "coisotropy_window": coiso_window}
    _write_json(out / "resolved_config.json", resolved)

    spec = StratumSpec(genus, window=window)
    rs = strata.derive_relations(spec)
    trs = cohomology.linearize(rs)
    table = strata.StructureConstantTable(spec, rs)

    rs_ext = strata.derive_rows(genus, max_row=2 * triples_max - 1, pair_sum=3 * triples_max)
    spec_ext = StratumSpec(genus, window=max(2 * triples_max - 1, 2 * genus + 1))
    table_ext = strata.StructureConstantTable(spec_ext, rs_ext)
    trs_ext = cohomology.linearize(rs_ext)
    idx = spec_ext.basis_indices(triples_max)
    triples = [(a, b, c) for ai, a in enumerate(idx) for b in idx for c in idx[ai + 1:]]

    pairs = cohomology.representable_pairs(spec, window)
    odd = [j for j in spec.odd_indices() if j <= window]
    report = {
        "cocycle_identity": cohomology.cocycle_identity_check(trs_ext, table_ext, triples).to_json(),
        "coboundary_property": cohomology.coboundary_property_check(trs, table, spec, pairs).to_json(),
        "square_identity": cohomology.square_identity_check(trs, table, spec, odd).to_json(),
        "poisson_ideal": geometry.coisotropy_check(genus, coiso_window).to_json(),
    }
    _write_json(out / "cohomology_report.json", report)
    ok = all(part["ok"] for part in report.values())
    return 0 if ok else 2


def _simulate_bh(cfg: dict, out: Path, grid: Grid1D, init: dict, t_end, cfl, snaps) -> int:
    f0 = Field1D(grid, init["u"], "u")
    t_c = numerics.scalar_breaking_time(f0)
    wrote = 0
    for i, t in enumerate(snaps):
        try:
            u, _ = numerics.solve_scalar_characteristics(f0, t)
        except PastCatastropheError:
            if wrote == 0:
                return 3
            break
        _write_snapshot_csv(out / f"snapshot_{i:03d}.csv", t, grid.x, {"u": u.values})
        wrote += 1
    times = [t for t in np.linspace(0.0, min(t_end, 0.98 * t_c), 33) if t <= t_end]
    trace = numerics.scalar_gradient_trace(f0, times)
    _write_trace_csv(out / "trace.csv", ["t", "max_grad"], trace)
    report = {"t_c_exact": t_c if math.isfinite(t_c) else "inf"}
    try:
        est, fit = numerics.catastrophe_estimate(trace)
        report["t_c_estimate"] = est
        report["fit"] = fit
    except NoBlowupDetectedError as exc:
        report["no_blowup"] = str(exc)
    _write_json(out / "catastrophe_report.json", report)
    return 0


def _simulate_diagonal(sysd, names, out, grid, init_fields, t_end, cfl, snaps) -> int:
    try:
        res = numerics.solve_diagonal(sysd, init_fields, t_end, cfl, record_times=snaps)
    except CatastropheSignal as sig:
        _write_trace_csv(out / "trace.csv", ["t", "max_grad"], sig.report.max_gradient_trace)
        _write_json(out / "catastrophe_report.json",
                    {"signal_t": sig.t, "t_c_estimate": sig.report.t_estimate,
                     "fit": sig.report.fit})
        return 3
    for i, (t, vals) in enumerate(sorted(res.snapshots.items())):
        _write_snapshot_csv(out / f"snapshot_{i:03d}.csv", t, grid.x,
                            {name: v for name, v in zip(names, vals)})
    _write_trace_csv(out / "trace.csv", ["t", "max_grad"], res.trace)
    _write_json(out / "catastrophe_report.json", {"signal_t": None})
    return 0


def cmd_simulate(cfg: dict, out: Path) -> int:
    system = _require(cfg, "system", str,
                      choices={"bh", "dckdv1", "dckdv2", "benney", "riemann1"})
    grid = _grid_from_config(cfg)
    t_end = float(_require(cfg, "t_end", (int, float), default=0.2))
    cfl = float(_require(cfg, "cfl", (int, float), default=0.5))
    snaps = [float(t) for t in _require(cfg, "snapshot_times", list, default=[t_end])]
    init_cfg = _require(cfg, "init", dict)
    x = grid.x
    init = {name: _eval_initial(expr, x) for name, expr in init_cfg.items()}
    resolved = {"command": "simulate", "system": system, "t_end": t_end, "cfl": cfl,
                "snapshot_times": snaps, "init": dict(init_cfg),
                "grid": {"x0": grid.x0, "dx": grid.dx, "n": grid.n,
                         "boundary": grid.boundary}}
    _write_json(out / "resolved_config.json", resolved)

    if system == "bh":
        if "u" not in init:
            raise ConfigError("bh needs init.u")
        return _simulate_bh(cfg, out, grid, init, t_end, cfl, snaps)

    if system == "riemann1":
        need = ["gamma[1]", "gamma[2]", "gamma[3]"]
        if not all(k in init for k in need):
            raise ConfigError(f"riemann1 needs init for {need}")
        fields = [Field1D(grid, init[k], k) for k in need]
        return _simulate_diagonal(flows.riemann_form_g1(), need, out, grid,
                                  fields, t_end, cfl, snaps)

    if system == "benney":
        if "u" not in init or "v" not in init:
            raise ConfigError("benney needs init.u and init.v")
        if np.any(init["v"] <= 0):
            raise ConfigError("benney initial v must be positive")
        try:
            res = numerics.solve_benney(Field1D(grid, init["u"], "u"),
                                        Field1D(grid, init["v"], "v"),
                                        t_end, cfl, record_times=snaps)
        except CatastropheSignal as sig:
            _write_trace_csv(out / "trace.csv", ["t", "max_grad"],
                             sig.report.max_gradient_trace)
            _write_json(out / "catastrophe_report.json",
                        {"signal_t": sig.t, "t_c_estimate": sig.report.t_estimate})
            return 3
        for i, (t, (uv, vv)) in enumerate(sorted(res.snapshots.items())):
            _write_snapshot_csv(out / f"snapshot_{i:03d}.csv", t, grid.x,
                                {"u": uv, "v": vv})
        _write_trace_csv(out / "trace.csv", ["t", "max_grad", "delta", "g2", "g3"],
                         res.trace)
        _write_json(out / "catastrophe_report.json", {"signal_t": None})
        return 0

    # coupled systems, method of lines
    g = 1 if system == "dckdv1" else 2
    sys_u = flows.derive_dckdv(g, 1)
    names = [u_symbol(m) for m in range(2 * g + 1)]
    if not all(k in init for k in names):
        raise ConfigError(f"{system} needs init for {names}")
    fields = [Field1D(grid, init[k], k) for k in names]
    state = fields
    t_prev = 0.0
    report: dict = {"snapshots": []}
    for i, t in enumerate(sorted(snaps)):
        state = numerics.solve_hydro_mol(sys_u, state, t - t_prev, cfl=cfl)
        t_prev = t
        columns = {name: f.values for name, f in zip(names, state)}
        if g == 1 and cfg.get("cross_check"):
            r1, r2, r3 = flows.cubic_roots_real(init[names[2]], init[names[1]],
                                                init[names[0]])
            gam = [Field1D(grid, arr, f"gamma[{i+1}]") for i, arr in ((0, r1), (1, r2), (2, r3))]
            res = numerics.solve_diagonal(flows.riemann_form_g1(), gam, t, cfl)
            u2b, u1b, u0b = flows.vieta_from_roots(*[f.values for f in res.fields])
            back = {names[2]: u2b, names[1]: u1b, names[0]: u0b}
            disc = max(float(np.max(np.abs(columns[n] - back[n]))) for n in names)
            columns["discrepancy"] = np.abs(columns[names[0]] - back[names[0]])
            report["snapshots"].append({"t": t, "cross_check_linf": disc})
        _write_snapshot_csv(out / f"snapshot_{i:03d}.csv", t, grid.x, columns)
    _write_json(out / "catastrophe_report.json", report)
    return 0


def cmd_hirota(cfg: dict, out: Path) -> int:
    source = _require(cfg, "source", dict)
    kind = _require(source, "kind", str, choices={"quadratic", "selfsimilar", "csv"})
    mode = _require(cfg, "mode", str, default="dnls", choices={"dnls", "bh13", "bh15"})
    n3 = _require(cfg, "n3", int, default=65)
    n5 = _require(cfg, "n5", int, default=65)
    resolved = {"command": "hirota", "source": source, "mode": mode, "n3": n3, "n5": n5}
    _write_json(out / "resolved_config.json", resolved)
    if kind == "quadratic":
        a = float(_require(source, "a", (int, float), default=1.0))
        b = float(_require(source, "b", (int, float), default=2.0))
        c = float(_require(source, "c", (int, float), default=3.0))
        h = 1.0 / 16.0
        x3 = (np.arange(n3) - n3 // 2) * h
        x5 = (np.arange(n5) - n5 // 2) * h
        X3, X5 = np.meshgrid(x3, x5, indexing="ij")
        phi = 0.5 * (a * X3 ** 2 + 2 * b * X3 * X5 + c * X5 ** 2)
        dx3 = dx5 = h
    elif kind == "selfsimilar":
        x3 = np.linspace(1.0, 2.0, n3)
        x5 = np.linspace(1.0, 2.0, n5)
        X3, X5 = np.meshgrid(x3, x5, indexing="ij")
        phi = numerics.selfsimilar_phi(X3, X5)
        dx3, dx5 = x3[1] - x3[0], x5[1] - x5[0]
    else:
        path = _require(source, "path", str)
        try:
            phi = np.loadtxt(path, delimiter=",")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        dx3 = float(_require(source, "dx3", (int, float), default=1.0))
        dx5 = float(_require(source, "dx5", (int, float), default=1.0))
    try:
        res = numerics.hirota_residual(phi, dx3, dx5, mode)
    except ShapeMismatchError as exc:
        raise ConfigError(str(exc)) from exc
    np.savetxt(out / "residual.csv", res, delimiter=",")
    _write_json(out / "summary.json", {"max_abs_residual": float(np.max(np.abs(res))),
                                       "shape": list(res.shape)})
    return 0


def cmd_cocycle_trace(cfg: dict, out: Path) -> int:
    system = _require(cfg, "system", str, default="bh", choices={"bh", "benney"})
    grid = _grid_from_config(cfg)
    init_cfg = _require(cfg, "init", dict)
    x = grid.x
    init = {name: _eval_initial(expr, x) for name, expr in init_cfg.items()}
    resolved = {"command": "cocycle-trace", "system": system, "init": dict(init_cfg),
                "grid": {"x0": grid.x0, "dx": grid.dx, "n": grid.n,
                         "boundary": grid.boundary}}
    _write_json(out / "resolved_config.json", resolved)

    if system == "bh":
        j = _require(cfg, "j", int, default=1)
        k = _require(cfg, "k", int, default=1)
        f0 = Field1D(grid, init["u"], "u")
        t_c = numerics.scalar_breaking_time(f0)
        if not math.isfinite(t_c):
            _write_json(out / "summary.json", {"error": "no blow-up for this data"})
            return 2
        mg0 = float(np.max(np.abs(numerics.derivative(f0.values, grid.dx, grid.boundary))))
        rows = []
        for step in range(2, 80):
            t = t_c * (1.0 - 0.75 ** step)
            u, ux = numerics.characteristic_state(f0, t)
            mg = float(np.max(np.abs(ux)))
            sup_psi, sup_f = cohomology.sup_cocycle_g0(u, ux, j, k)
            rows.append((t, mg, sup_psi, sup_f))
            if mg > numerics.GRADIENT_THRESHOLD_FACTOR * mg0:
                break
        trace = np.array(rows)
        _write_trace_csv(out / "cocycle_trace.csv",
                         ["t", "max_grad", "sup_psi", "sup_f"], trace)
        sel = trace[:, 1] >= trace[-1, 1] / 10.0
        corr = float(np.corrcoef(np.log(trace[sel, 1]), np.log(trace[sel, 2]))[0, 1])
        tail = max(2, len(trace) // 10)
        mono = bool(np.all(np.diff(trace[-tail:, 2]) > 0))
        _write_json(out / "summary.json",
                    {"correlation_log_final_decade": corr,
                     "monotone_final_tenth": mono, "points": int(len(trace))})
        return 0

    # benney blow-up trace with the reduced elliptic pairing
    if "u" not in init or "v" not in init:
        raise ConfigError("benney needs init.u and init.v")
    t_end = float(_require(cfg, "t_end", (int, float), default=3.0))
    cfl = float(_require(cfg, "cfl", (int, float), default=0.5))
    rows = []

    def psi_sup(u, v):
        ux = numerics.derivative(u, grid.dx)
        vx = numerics.derivative(v, grid.dx)
        lam2, lam1 = cohomology.dnls_cocycle_from_state(u, v, ux, vx)
        return max(float(np.max(np.abs(lam2))), float(np.max(np.abs(lam1))))

    try:
        res = numerics.solve_benney(Field1D(grid, init["u"], "u"),
                                    Field1D(grid, init["v"], "v"),
                                    t_end, cfl,
                                    record_times=list(np.linspace(0, t_end, 61)[1:]))
        snaps = sorted(res.snapshots.items())
        for t, (uv, vv) in snaps:
            rows.append((t, max(float(np.max(np.abs(numerics.derivative(uv, grid.dx)))),
                                float(np.max(np.abs(numerics.derivative(vv, grid.dx))))),
                         psi_sup(uv, vv), 0.0))
        signal_t = None
    except CatastropheSignal as sig:
        signal_t = sig.t
        if sig.state is not None:
            u = 0.5 * (sig.state[0] + sig.state[1])
            v = ((sig.state[0] - sig.state[1]) / 4.0) ** 2
            rows.append((sig.t, float("nan"), psi_sup(u, v), 0.0))
    if len(rows) < 5:
        _write_json(out / "summary.json", {"error": "trace too short"})
        return 2
    trace = np.array(rows)
    _write_trace_csv(out / "cocycle_trace.csv", ["t", "max_grad", "sup_psi", "sup_f"], trace)
    tail = max(2, len(trace) // 10)
    mono = bool(np.all(np.diff(trace[-tail:, 2]) >= 0))
    _write_json(out / "summary.json",
                {"monotone_final_tenth": mono, "signal_t": signal_t,
                 "points": int(len(trace))})
    return 0 if mono else 2


# ---------------------------------------------------------------------------
# entry point


_COMMANDS = {
    "relations": cmd_relations,
    "verify-cohomology": cmd_verify_cohomology,
    "simulate": cmd_simulate,
    "hirota": cmd_hirota,
    "cocycle-trace": cmd_cocycle_trace,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="strataflow",
        description="relation derivation, verification, and flow simulation")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config entry")
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cfg = _load_config(args.config, args.override)
        return _COMMANDS[args.command](cfg, out)
    except (ConfigError, InconsistentTruncationError, WindowExceededError,
            PastCatastropheError, VacuumStateError, flows.ComplexRootsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NoBlowupDetectedError as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
