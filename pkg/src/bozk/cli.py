"""Command-line front end.

    bozk ground-state   --p 1/1 --nx 512 --ny 128 --lx 125.66 --ly 31.42 --out runs/gs
    bozk sharp-constant --p 2/1 ... --count 1000 --out runs/rho
    bozk evolve         --p 2/1 --initial gaussian --amplitude 0.1 --t-final 1 --dt 0.01
    bozk verify         --p 1/1,4/3,2/1 --out runs/verify
    bozk functionals    --input runs/gs/phi.bin --p 1/1

Parameters may also come from a flat ``key = value`` file given with
``--config``; flags override file values.  Exit codes: 0 success, 2 invalid
configuration, 3 non-convergence, 4 blow-up, 5 verification failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, io
from .evolution import (BlowUpError, bound_criteria, energy_chain_monitor, evolve,
                        translate)
from .functionals import eval_functionals
from .ground_state import (CollapseError, GroundStateSolution, NonConvergenceError,
                           initial_guess, petviashvili_solve, reference_grid)
from .sharp_constant import (critical_threshold, lower_bound_check, rho_report,
                             verify_inequality)
from .spectral import Grid2D, InvalidExponentError, RealField, make_grid, parse_p

log = logging.getLogger("bozk")

EXIT_OK, EXIT_CONFIG, EXIT_NOCONV, EXIT_BLOWUP, EXIT_VERIFY = 0, 2, 3, 4, 5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    p: str = "1/1"
    nx: int = 512
    ny: int = 128
    lx: float = 40 * math.pi
    ly: float = 10 * math.pi
    tol: float = 1e-10
    max_iter: int = 2000
    dt: Optional[float] = None
    t_final: float = 1.0
    seed: int = 0
    out: str = "bozk-out"
    snapshot_every: int = 0
    ceiling_factor: float = 1e6
    sample_every: int = 10
    count: int = 1000
    input: Optional[str] = None
    initial: str = "gaussian"
    amplitude: float = 0.1
    ax: float = 1.0
    ay: float = 1.0
    dealias: bool = False
    box_correction: bool = True
    cases: str = ""
    # verify and sharp-constant: auto -> reference grid per p unless a grid flag is set
    grid_mode: str = "auto"
    extra: dict = field(default_factory=dict)

    def to_lines(self) -> list:
        d = dataclasses.asdict(self)
        extra = d.pop("extra")
        lines = [f"{k} = {'' if v is None else v}" for k, v in sorted(d.items())]
        lines += [f"{k} = {v}" for k, v in sorted(extra.items())]
        return lines

    def grid(self) -> Grid2D:
        return make_grid(self.nx, self.ny, self.lx, self.ly)

    def exponent(self) -> Fraction:
        return parse_p(self.p)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _coerce(key: str, raw):
    if raw is None:
        return None
    typ = _FIELDS[key].type
    s = str(raw).strip()
    try:
        if typ in ("int",):
            return int(s)
        if typ in ("float",):
            return float(s)
        if typ == "Optional[float]":
            return None if s in ("", "none", "None") else float(s)
        if typ == "bool":
            return _BOOL[s.lower()]
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from exc
    if typ == "Optional[str]":
        return s or None
    return s


def read_config_file(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def resolve(command: str, args: argparse.Namespace) -> RunConfig:
    raw = read_config_file(args.config) if getattr(args, "config", None) else {}
    for k, v in vars(args).items():
        if k in ("config", "command", "func") or v is None:
            continue
        raw[k] = v
    cfg = RunConfig(command=command)
    for k, v in raw.items():
        if k in _FIELDS and k not in ("extra", "command"):
            setattr(cfg, k, _coerce(k, v))
        else:
            cfg.extra[k] = v
    if cfg.grid_mode == "auto":
        cfg.grid_mode = "config" if any(k in raw for k in ("nx", "ny", "lx", "ly")) else "reference"
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.command != "verify":
        try:
            cfg.exponent()
        except InvalidExponentError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        cfg.grid()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not cfg.tol > 0:
        raise ConfigError("tol must be positive")
    if cfg.max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError("dt must be positive")
    if not cfg.t_final > 0:
        raise ConfigError("t_final must be positive")
    if not cfg.ceiling_factor > 0:
        raise ConfigError("ceiling_factor must be positive")
    if cfg.count < 1 or cfg.sample_every < 1 or cfg.snapshot_every < 0:
        raise ConfigError("count, sample_every must be >= 1 and snapshot_every >= 0")
    if cfg.grid_mode not in ("auto", "config", "reference"):
        raise ConfigError(f"grid_mode must be auto, config or reference, got {cfg.grid_mode!r}")
    if cfg.initial not in ("gaussian", "ground-state"):
        raise ConfigError(f"initial must be 'gaussian' or 'ground-state', got {cfg.initial!r}")
    for c in _cases(cfg):
        try:
            parse_p(c)
        except InvalidExponentError as exc:
            raise ConfigError(str(exc)) from exc


def _cases(cfg: RunConfig) -> list:
    src = cfg.cases or (cfg.p if cfg.command == "verify" else "")
    return [c.strip() for c in src.split(",") if c.strip()]


def _prepare_out(cfg: RunConfig) -> Path:
    try:
        out = io.ensure_dir(cfg.out)
    except OSError as exc:
        raise ConfigError(f"output path {cfg.out} is not writable: {exc}") from exc
    (out / "config.txt").write_text("\n".join(cfg.to_lines()) + "\n")
    (out / "VERSION").write_text(f"bozk {__version__}\n")
    return out


def _solve(cfg: RunConfig, p: Fraction, grid: Optional[Grid2D] = None) -> GroundStateSolution:
    g = grid or cfg.grid()
    return petviashvili_solve(p, g, initial_guess(g), tol=cfg.tol, max_iter=cfg.max_iter,
                              box_correction=cfg.box_correction, dealias=cfg.dealias)


def _load_gs(cfg: RunConfig, p: Fraction, grid: Optional[Grid2D] = None) -> GroundStateSolution:
    if cfg.input:
        phi = io.read_snapshot(cfg.input)
        return GroundStateSolution.from_field(phi, p, tol=cfg.tol,
                                              box_correction=cfg.box_correction,
                                              dealias=cfg.dealias)
    return _solve(cfg, p, grid)


# -- subcommands -------------------------------------------------------------

def cmd_ground_state(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    p = cfg.exponent()
    try:
        gs = _solve(cfg, p)
    except NonConvergenceError as exc:
        io.write_csv(out / "iterations.csv", ["iter", "residual", "m_factor"],
                     ((i + 1, r, m) for i, (r, m) in enumerate(exc.trace)))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except CollapseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    gs.write(out)
    print(json.dumps(dict(residual=gs.residual, iterations=gs.iterations,
                          l2sq=gs.report.l2sq, dxsq=gs.report.dxsq,
                          max_rel_pohozaev=gs.pohozaev.max_rel_error())))
    return EXIT_OK


def cmd_sharp_constant(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    p = cfg.exponent()
    try:
        gs = _load_gs(cfg, p, _case_grid(cfg, p))
    except (NonConvergenceError, CollapseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    if not gs.converged:
        print(f"error: ground state unconverged (residual {gs.residual:.3e} >= {cfg.tol:.1e})",
              file=sys.stderr)
        return EXIT_NOCONV
    rep = rho_report(gs)
    margins = verify_inequality(cfg.seed, cfg.count, p, rep.rho_inv,
                                include=[("phi", rep.rho_inv_via_quotient)])
    margins.write_csv(out / "ensemble.csv")
    checks = dict(
        spread=dict(value=rep.spread, tol=1e-8, ok=rep.spread < 1e-8),
        dominance=dict(value=margins.min_rel_margin, tol=-1e-8,
                       ok=margins.min_rel_margin >= -1e-8),
    )
    doc = dict(report=rep.to_dict(), ensemble=margins.to_dict(), checks=checks,
               ground_state=dict(residual=gs.residual, grid=[gs.grid.nx, gs.grid.ny,
                                                             gs.grid.lx, gs.grid.ly]))
    if p == Fraction(4, 3):
        thr = critical_threshold(rep.rho)
        target = 4 / 27 * gs.report.l2sq ** 2
        rel = abs(thr - target) / target
        doc["critical_threshold"] = dict(m4_from_rho=thr, four_27_phi4=target, rel_diff=rel)
        checks["critical_threshold"] = dict(value=rel, tol=1e-10, ok=rel < 1e-10)
    io.write_json(out / "sharp_constant.json", doc)
    print(json.dumps(dict(rho_inv=rep.rho_inv, spread=rep.spread,
                          min_rel_margin=margins.min_rel_margin)))
    return EXIT_OK if all(c["ok"] for c in checks.values()) else EXIT_VERIFY


def cmd_evolve(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    p = cfg.exponent()
    g = cfg.grid()
    gs = None
    want_gs = cfg.initial == "ground-state" or bool(cfg.input) or \
        str(cfg.extra.get("criteria", "0")).lower() in ("1", "true", "yes")
    if want_gs:
        # Gaussian data only needs phi's norms: solve on the resolved reference grid
        ref = reference_grid(p) if cfg.initial == "gaussian" and not cfg.input else None
        try:
            gs = _load_gs(cfg, p, ref)
        except (NonConvergenceError, CollapseError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NOCONV
    if cfg.initial == "ground-state":
        u0 = gs.phi * cfg.amplitude
        g = u0.grid
    else:
        u0 = initial_guess(g, cfg.amplitude, cfg.ax, cfg.ay)
    crit = bound_criteria(u0, p, gs) if gs is not None else None
    snapdir = out / "snapshots" if cfg.snapshot_every else None
    doc = dict(criteria=crit.to_dict() if crit else None)
    try:
        tr = evolve(u0, p, cfg.t_final, cfg.dt, cfg.sample_every, dealias=True,
                    ceiling_factor=cfg.ceiling_factor, criteria=crit, snapshot_every=cfg.snapshot_every or None,
                    snapshot_dir=snapdir)
    except BlowUpError as exc:
        exc.trace.write_csv(out / "trace.csv")
        doc.update(summary=exc.trace.summary(), error=str(exc),
                   last_valid_t=exc.trace.last_valid_t)
        io.write_json(out / "evolve.json", doc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    tr.write_csv(out / "trace.csv")
    doc["summary"] = tr.summary()
    if crit is not None:
        doc["chain"] = energy_chain_monitor(tr, crit.rho, crit)
    if cfg.initial == "ground-state" and cfg.amplitude == 1.0:
        ref = translate(gs.phi, tr.t[-1])
        err = np.linalg.norm(tr.final_state.u.values - ref.values) / np.linalg.norm(ref.values)
        doc["shape_error"] = float(err)
    io.write_json(out / "evolve.json", doc)
    print(json.dumps(dict(t=tr.t[-1], mass_drift=tr.mass_drift, energy_drift=tr.energy_drift,
                          shape_error=doc.get("shape_error"))))
    return EXIT_OK


def _case_grid(cfg: RunConfig, p: Fraction) -> Grid2D:
    key = f"grid_{p.numerator}_{p.denominator}"
    if key in cfg.extra:
        nx, ny, lx, ly = (t.strip() for t in str(cfg.extra[key]).split(","))
        return make_grid(int(nx), int(ny), float(lx), float(ly))
    if cfg.grid_mode == "reference":
        return reference_grid(p)
    return cfg.grid()


def _check(value, tol, ok) -> dict:
    return dict(value=float(value), tol=tol, ok=bool(ok))


def verify_case(cfg: RunConfig, p: Fraction) -> dict:
    gs = _solve(cfg, p, _case_grid(cfg, p))
    r = gs.report
    pz = gs.pohozaev.rel_errors()
    rep = rho_report(gs)
    res = {
        "residual": _check(gs.residual, cfg.tol, gs.residual < cfg.tol),
        "pohozaev_l2": _check(pz["l2"], 1e-6, abs(pz["l2"]) < 1e-6),
        "pohozaev_dy": _check(pz["dy"], 1e-6, abs(pz["dy"]) < 1e-6),
        "pohozaev_J": _check(pz["J"], 1e-6, abs(pz["J"]) < 1e-6),
        "K_identity": _check(r.K / r.I, 1e-6, abs(r.K / r.I) < 1e-6),
        "action": _check(r.S / (0.5 * r.dxsq) - 1, 1e-8, abs(r.S / (0.5 * r.dxsq) - 1) < 1e-8),
        "route_spread": _check(rep.spread, 1e-8, rep.spread < 1e-8),
    }
    if p == Fraction(4, 3):
        res["critical_energy"] = _check(r.E / r.I, 1e-6, abs(r.E / r.I) < 1e-6)
        thr = critical_threshold(rep.rho)
        target = 4 / 27 * r.l2sq ** 2
        res["critical_threshold"] = _check(abs(thr - target) / target, 1e-10,
                                           abs(thr - target) / target < 1e-10)
    if p in (Fraction(4, 5), Fraction(2)):
        lb = lower_bound_check(gs)
        res["corollary_slack"] = _check(lb["slack"], -1e-6, lb["slack"] >= -1e-6)
        res["corollary_Q"] = _check(lb["Q"] - 1, 1e-12, abs(lb["Q"] - 1) < 1e-12)
    return res


def cmd_verify(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    matrix = {}
    for c in _cases(cfg):
        p = parse_p(c)
        try:
            matrix[str(p)] = verify_case(cfg, p)
        except (NonConvergenceError, CollapseError) as exc:
            matrix[str(p)] = {"solve": dict(value=float("nan"), tol=cfg.tol, ok=False,
                                            error=str(exc))}
    ok = all(v["ok"] for case in matrix.values() for v in case.values())
    io.write_json(out / "verify.json", dict(all_pass=ok, cases=matrix))
    for case, checks in matrix.items():
        for name, v in checks.items():
            print(f"{'PASS' if v['ok'] else 'FAIL'} p={case} {name} {v['value']:.3e}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_functionals(cfg: RunConfig) -> int:
    if not cfg.input:
        raise ConfigError("functionals needs --input SNAPSHOT")
    phi = io.read_snapshot(cfg.input)
    out = _prepare_out(cfg)
    r = eval_functionals(phi, cfg.exponent())
    io.write_json(out / "functionals.json", r.to_dict())
    print(r.to_json())
    return EXIT_OK


COMMANDS = {
    "ground-state": cmd_ground_state,
    "sharp-constant": cmd_sharp_constant,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
    "functionals": cmd_functionals,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bozk", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--p", help="exponent as a fraction 'k/l' (verify: comma list)")
        sp.add_argument("--nx", type=int)
        sp.add_argument("--ny", type=int)
        sp.add_argument("--lx", type=float)
        sp.add_argument("--ly", type=float)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-final", dest="t_final", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--snapshot-every", dest="snapshot_every", type=int)
        sp.add_argument("--ceiling-factor", dest="ceiling_factor", type=float,
                        help="evolve: abort when |u|_inf exceeds this multiple of |u0|_inf")
        sp.add_argument("--sample-every", dest="sample_every", type=int)
        sp.add_argument("--count", type=int)
        sp.add_argument("--input")
        sp.add_argument("--initial")
        sp.add_argument("--amplitude", type=float)
        sp.add_argument("--ax", type=float)
        sp.add_argument("--ay", type=float)
        sp.add_argument("--cases", help="verify: comma-separated exponents")
        sp.add_argument("--grid-mode", dest="grid_mode", choices=("auto", "config", "reference"),
                        help="verify, sharp-constant: reference = per-p resolved grids "
                             "(default unless a grid flag is set)")
        sp.add_argument("-v", "--verbose", action="store_true", default=None)
    return ap


def _subparser(ap: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for act in ap._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[name]
    raise KeyError(name)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if not args.command:
        ap.print_usage(sys.stderr)
        return EXIT_CONFIG
    verbose = args.__dict__.pop("verbose", None)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify" and not (args.p or args.cases or args.config):
        _subparser(ap, "verify").print_usage(sys.stderr)
        print("verify: no cases given (use --p 1/1,4/3,2/1 or cases= in --config)",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = resolve(args.command, args)
        if args.command == "verify" and not _cases(cfg):
            print("verify: no cases given", file=sys.stderr)
            return EXIT_CONFIG
        return COMMANDS[args.command](cfg)
    except (ConfigError, io.SnapshotFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
