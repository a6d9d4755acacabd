"""Command-line front end: config parsing, dispatch and serialization.

Config files hold ``key = value`` lines grouped in ``[problem]``, ``[grid]``,
``[solver]``, ``[output]`` and the optional ``[study]`` section; ``seed``
may sit before the first section.  ``#`` starts a comment.

Exit codes: 0 converged or PASS, 2 regime refusal (including configs that
violate the physical gates), 3 nonconvergence or FAIL.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import io
import itertools
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import ThresholdError, gn_details, sobolev_details, thresholds
from .discretization import Field, build_grid, load_field, normalize_mass, sample_bubble, sample_gaussian, save_field
from .fiber import FiberRangeError, fiber_coefficients, fiber_roots, fiber_samples
from .model import ProblemParams, critical_exponent, eval_functionals
from .solvers import (
    TRACE_COLUMNS,
    RegimeError,
    SolveOptions,
    solve_global_min,
    solve_local_min,
    solve_mountain_pass,
    solve_pc_max,
)
from . import studies

EXIT_OK, EXIT_REGIME, EXIT_FAIL = 0, 2, 3

LEVELS = {
    "global": solve_global_min,
    "local": solve_local_min,
    "mp": solve_mountain_pass,
    "pcmax": solve_pc_max,
}
KINDS = ("continuation", "nonexistence", "unbounded", "gap", "regime", "growth")
FORMATS = ("csv", "structured-text")


class ConfigError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


# --- config -----------------------------------------------------------------


@dataclass(frozen=True)
class GridConfig:
    R: float = 16.0
    M: int = 4096


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "."
    formats: tuple = FORMATS


@dataclass(frozen=True)
class StudyConfig:
    mus: tuple = (0.1, 0.01, 0.001)
    trials: int = 1000
    floor: float = -1e3
    q: float | None = None
    Ns: tuple = ()
    alphas: tuple = ()
    ps: tuple = ()
    mu_values: tuple = ()
    cs: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemParams
    grid: GridConfig = GridConfig()
    solver: SolveOptions = SolveOptions()
    output: OutputConfig = OutputConfig()
    study: StudyConfig = StudyConfig()
    seed: int = 0
    c_spec: str = field(default="", compare=False)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"{text!r} is not finite")
    return v


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _floats(text):
    return tuple(_float(x) for x in text.split(",") if x.strip())


def _ints(text):
    return tuple(_int(x) for x in text.split(",") if x.strip())


def _masses(text):
    out = []
    for x in text.split(","):
        x = x.strip().replace(" ", "")
        if x:
            out.append(x if x.endswith(("c0", "D", "mass_bound")) else _float(x))
    return tuple(out)


def _formats(text):
    items = tuple(x.strip() for x in text.split(",") if x.strip())
    bad = [x for x in items if x not in FORMATS]
    if bad or not items:
        raise ValueError(f"formats must be a subset of {FORMATS}, got {text!r}")
    return items


_SOLVER_TYPES = {f.name: (_int if f.type in ("int", int) else _float) for f in dataclasses.fields(SolveOptions)}

SCHEMA = {
    "problem": {"N": _int, "alpha": _float, "mu": _float, "p": _float, "c": str},
    "grid": {"R": _float, "M": _int},
    "solver": _SOLVER_TYPES,
    "output": {"directory": str, "formats": _formats},
    "study": {"mus": _floats, "trials": _int, "floor": _float, "q": _float,
              "Ns": _ints, "alphas": _floats, "ps": _floats, "mu_values": _floats, "cs": _masses},
    "": {"seed": _int},
}
REQUIRED = ("N", "alpha", "mu", "p", "c")


def _resolve_c(spec: str, N, alpha, mu, p) -> float:
    s = spec.replace(" ", "")
    for key in ("mass_bound", "c0", "D"):
        if s.endswith(key):
            factor = _float(s[: -len(key)] or "1")
            th = thresholds(ProblemParams(N, alpha, mu, p, 1.0), require=(key,))
            return factor * getattr(th, key)
    return _float(s)


def _lines(text):
    section = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA or section == "":
                raise ConfigError(f"unknown section [{section}]", lineno)
            yield lineno, section, None, None
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (x.strip() for x in line.split("=", 1))
        yield lineno, section, key, value


def parse_config(text: str) -> RunConfig:
    """Validate a config text; every error names its line.

    ``c`` may be a decimal or a multiple of a threshold (``0.5 c0``,
    ``1.2 D``, ``0.5 mass_bound``); thresholds are resolved here.
    """
    vals: dict = {s: {} for s in SCHEMA}
    where: dict = {}
    for lineno, section, key, value in _lines(text):
        if key is None:
            continue
        if key not in SCHEMA[section]:
            scope = f"[{section}]" if section else "the top level"
            raise ConfigError(f"unknown key {key!r} in {scope}", lineno)
        if key in vals[section]:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            vals[section][key] = SCHEMA[section][key](value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None
        where[(section, key)] = lineno
    pr = vals["problem"]
    for key in REQUIRED:
        if key not in pr:
            raise ConfigError(f"missing required key {key!r} in [problem]")
    N, alpha, mu, p = pr["N"], pr["alpha"], pr["mu"], pr["p"]
    cline = where[("problem", "c")]
    # physical gates, attributed to the offending line
    if N < 2:
        raise ConfigError(f"N must be an integer >= 2, got {N}", where[("problem", "N")])
    if not p > 2:
        raise ConfigError(f"p must exceed 2, got {p}", where[("problem", "p")])
    if p > critical_exponent(N) * (1 + 1e-14):
        raise ConfigError(f"p = {p} exceeds 2* = {critical_exponent(N):g} for N = {N}", where[("problem", "p")])
    try:
        c = _resolve_c(pr["c"], N, alpha, mu, p)
    except (ValueError, ThresholdError) as exc:
        raise ConfigError(f"c: {exc}", cline) from None
    if not c > 0:
        raise ConfigError(f"c must be positive, got {c}", cline)
    problem = ProblemParams(N, alpha, mu, p, c)
    try:
        grid = GridConfig(**vals["grid"])
        if not grid.R > 0 or grid.M < 64:
            raise ValueError(f"grid needs R > 0 and M >= 64, got R = {grid.R}, M = {grid.M}")
    except ValueError as exc:
        raise ConfigError(str(exc), where.get(("grid", "R")) or where.get(("grid", "M"))) from None
    try:
        solver = SolveOptions(**vals["solver"])
    except ValueError as exc:
        first = min((v for (s, _), v in where.items() if s == "solver"), default=None)
        raise ConfigError(f"solver: {exc}", first) from None
    output = OutputConfig(**vals["output"])
    study = StudyConfig(**vals["study"])
    if study.trials < 0:
        raise ConfigError("trials must be nonnegative", where[("study", "trials")])
    spec = pr["c"].replace(" ", "")
    return RunConfig(problem, grid, solver, output, study, vals[""].get("seed", 0),
                     "" if spec == repr(c) else spec)


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def config_items(cfg: RunConfig) -> list:
    """Resolved config as ``(dotted key, text)`` pairs in a fixed order."""
    out = [("seed", _fmt(cfg.seed))]
    for k in REQUIRED:
        out.append((f"problem.{k}", _fmt(getattr(cfg.problem, k))))
    for sec in ("grid", "solver", "output", "study"):
        obj = getattr(cfg, sec)
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if sec == "study" and (v == () or v is None):
                continue
            out.append((f"{sec}.{f.name}", _fmt(v)))
    return out


def format_config(cfg: RunConfig) -> str:
    """Config text that parses back to ``cfg``."""
    lines = []
    current = None
    for key, text in config_items(cfg):
        sec, _, name = key.rpartition(".")
        if sec != current:
            if sec:
                lines.append(f"\n[{sec}]")
            current = sec
        lines.append(f"{name} = {text}")
    return "\n".join(lines).lstrip("\n") + "\n"


# --- artifacts ----------------------------------------------------------------


def render_report(header: list, cfg: RunConfig, blocks: dict | None = None) -> str:
    """Structured text: header keys, named blocks, then the resolved config."""
    lines = [f"{k} = {_fmt(v)}" for k, v in header]
    for name, rows in (blocks or {}).items():
        lines.append(f"\n[{name}]")
        lines.extend(f"{k} = {_fmt(v)}" for k, v in rows)
    lines.append("\n[config]")
    lines.extend(f"{k} = {v}" for k, v in config_items(cfg))
    return "\n".join(lines) + "\n"


def write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for row in rows:
            wr.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


class _Out:
    def __init__(self, cfg: RunConfig, out: str | None):
        self.dir = Path(out or cfg.output.directory)
        self.formats = cfg.output.formats
        self.written = []

    def _path(self, name):
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {self.dir}: {exc}") from exc
        p = self.dir / name
        self.written.append(p)
        return p

    def text(self, name, text):
        if "structured-text" in self.formats:
            try:
                self._path(name).write_text(text)
            except OSError as exc:
                raise OSError(f"cannot write {self.dir / name}: {exc}") from exc

    def csv(self, name, columns, rows):
        if "csv" in self.formats:
            write_csv(self._path(name), columns, rows)

    def field(self, name, u):
        save_field(self._path(name), u)


# --- subcommands --------------------------------------------------------------


def _grid(cfg):
    return build_grid(cfg.problem.N, cfg.grid.R, cfg.grid.M)


def cmd_solve(cfg: RunConfig, level: str, out: _Out) -> int:
    g = _grid(cfg)
    try:
        rep = LEVELS[level](cfg.problem, g, cfg.solver)
    except (RegimeError, ThresholdError) as exc:
        out.text("report.txt", render_report([("command", "solve"), ("level", level), ("status", "refused"),
                                              ("message", str(exc))], cfg))
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REGIME
    f = rep.breakdown.components
    header = [
        ("command", "solve"), ("level", level), ("level_name", rep.level_name),
        ("status", "converged" if rep.converged else "not converged"), ("message", rep.message),
        ("I", rep.I), ("P", rep.breakdown.P), ("lambda", rep.lam),
        ("kinetic", f.kinetic), ("mass2", f.mass2), ("lp", f.lp), ("entropy", f.entropy),
        ("iterations", rep.iterations), ("residual_grad", rep.residual_grad),
        ("residual_P", rep.residual_P), ("membership", rep.membership),
    ]
    extras = sorted(rep.extras.items())
    text = render_report(header, cfg, {"extras": extras})
    out.text("report.txt", text)
    out.csv("trace.csv", TRACE_COLUMNS, rep.trace)
    out.field("field.dat", rep.state)
    print(text, end="")
    return EXIT_OK if rep.converged else EXIT_FAIL


def _family(name: str, cfg: RunConfig, g):
    prm = cfg.problem
    if name == "gaussian":
        return sample_gaussian(g, prm.c)
    if name == "weinstein":
        return Field(studies._weinstein_on(g, prm.N, prm.p, prm.c), g)
    if name == "bubble":
        return normalize_mass(sample_bubble(g, eps=1.0, cutoff=g.R / 4), g, prm.c)
    if name == "random":
        return Field(next(studies.random_fields(g, prm.c, 1, cfg.seed)), g)
    raise ConfigError(f"unknown family {name!r}")


def cmd_fiber(cfg: RunConfig, out: _Out, family: str = "gaussian", field_path: str | None = None,
              s_min: float = -4.0, s_max: float = 4.0, samples: int = 401) -> int:
    if field_path:
        u = load_field(field_path)
        g = u.grid
        if g.N != cfg.problem.N:
            raise ConfigError(f"{field_path}: field dimension {g.N} differs from N = {cfg.problem.N}")
        u = normalize_mass(u, g, cfg.problem.c)
    else:
        g = _grid(cfg)
        u = _family(family, cfg, g)
    fc = fiber_coefficients(eval_functionals(u, g, cfg.problem), cfg.problem)
    try:
        fr = fiber_roots(fc, alpha=cfg.problem.alpha)
    except FiberRangeError as exc:
        print(f"fibre scan failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rows = fiber_samples(fc, np.linspace(s_min, s_max, samples))
    out.csv("fiber.csv", ("s", "psi", "dpsi", "ddpsi"), rows)
    roots = [("kind", fr.kind), ("count", len(fr.roots)), ("roots", list(fr.roots)),
             ("second_derivatives", list(fr.second_derivatives)), ("s_u", fr.s_u), ("t_u", fr.t_u),
             ("tangent_at", fr.tangent_at), ("min_dpsi", fr.min_dpsi), ("classified", fr.classified)]
    coeffs = [("a", fc.a), ("b", fc.b), ("d", fc.d), ("e0", fc.e0), ("pg", fc.pg)]
    text = render_report([("command", "fiber"), ("source", field_path or family)], cfg,
                         {"roots": roots, "coefficients": coeffs})
    out.text("fiber_report.txt", text)
    print(text, end="")
    return EXIT_OK


def cmd_thresholds(cfg: RunConfig, out: _Out) -> int:
    prm = cfg.problem
    th = thresholds(prm)
    rows = list(th.as_dict().items())
    c = prm.c
    if th.c0 is not None:
        rows.append(("gate_local_min", f"c <= c0: {c <= th.c0}"))
        rows.append(("gate_two_solutions", f"c < c0: {c < th.c0}"))
    if th.D is not None:
        rows.append(("gate_pc_nonempty", f"c >= D: {c >= th.D}"))
    if th.mass_bound is not None and abs(prm.p - prm.mass_critical_exponent) <= 1e-12:
        rows.append(("gate_mass_bound", f"c < mass_bound: {c < th.mass_bound}"))
    rows.extend((f"note_{i}", n) for i, n in enumerate(th.notes))
    text = render_report([("command", "thresholds")], cfg, {"thresholds": rows})
    out.text("thresholds.txt", text)
    print(text, end="")
    return EXIT_OK


def cmd_gnconst(cfg: RunConfig, out: _Out) -> int:
    N, p = cfg.problem.N, cfg.problem.p
    rows = []
    if p < critical_exponent(N):
        res = gn_details(N, p)
        rows += [("C", res.C), ("kinetic", res.kinetic), ("mass2", res.mass2),
                 ("kinetic_over_mass_minus_1", res.kinetic / res.mass2 - 1), ("ode_residual", res.ode_residual)]
        out.field("weinstein.dat", res.state)
    if N >= 3:
        s = sobolev_details(N)
        rows += [("S", s.S), ("S_fit_radii", list(s.radii)), ("S_quotients", list(s.quotients))]
    text = render_report([("command", "gnconst")], cfg, {"constants": rows})
    out.text("gnconst.txt", text)
    print(text, end="")
    return EXIT_OK


def cmd_study(cfg: RunConfig, kind: str, out: _Out) -> int:
    prm, st = cfg.problem, cfg.study
    try:
        header, blocks, passed = _STUDIES[kind](cfg, prm, st, out)
    except (RegimeError, ThresholdError) as exc:
        out.text("study.txt", render_report([("command", "study"), ("kind", kind), ("status", "refused"),
                                             ("message", str(exc))], cfg))
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REGIME
    header = [("command", "study"), ("kind", kind), ("status", "PASS" if passed else "FAIL")] + header
    text = render_report(header, cfg, blocks)
    out.text("study.txt", text)
    print(text, end="")
    return EXIT_OK if passed else EXIT_FAIL


def _study_continuation(cfg, prm, st, out):
    rep = studies.continuation_mu_to_zero(prm, _grid(cfg), list(st.mus), cfg.solver)
    out.csv("continuation.csv", ("mu", "error_H1", "lambda_gap", "energy_gap", "I", "level", "converged"),
            zip(rep.mus, rep.errors_H1, rep.lambda_gap, rep.energy_gap, rep.energies, rep.levels, rep.converged))
    monotone = {k: rep.monotone(k) for k in ("errors_H1", "lambda_gap", "energy_gap")}
    passed = rep.complete and all(monotone.values())
    rows = [(f"monotone_{k}", v) for k, v in monotone.items()]
    rows += [(f"failure_{i}", f"mu = {m}: {msg}") for i, (m, msg) in enumerate(rep.failures)]
    return [("final_error_H1", rep.errors_H1[-1] if rep.errors_H1 else None)], {"checks": rows}, passed


def _study_nonexistence(cfg, prm, st, out):
    g = _grid(cfg)
    if prm.mu > 0 and prm.p < prm.mass_critical_exponent - 1e-12:
        rep = studies.dichotomy_scan(prm, g, st.trials, cfg.seed)
    else:
        rep = studies.nonexistence_scan(prm, g, st.trials, cfg.seed)
    out.csv("scan.csv", ("trial", "min_dpsi"), enumerate(rep.margins))
    rows = [("hypothesis", rep.hypothesis), ("bound", rep.bound)] + sorted(rep.root_counts.items())
    return [("trials", rep.trials), ("margin", rep.margin)], {"scan": rows}, rep.passed


def _study_unbounded(cfg, prm, st, out):
    rep = studies.unboundedness_demo(prm, _grid(cfg), floor=st.floor)
    out.csv("unbounded.csv", ("log_n", "I", "P", "mass2", "ring_kinetic"),
            zip(rep.log_n, rep.energies, rep.pohozaev, rep.mass2, rep.bump_kinetic))
    rows = [("core_mass2", rep.core_mass2), ("ring_mass2", rep.bump_mass2), ("grid_checked", rep.grid_checked)]
    return [("floor", rep.floor), ("min_I", min(rep.energies))], {"demo": rows}, rep.passed


def _study_gap(cfg, prm, st, out):
    rep = studies.critical_gap_check(prm, _grid(cfg), cfg.solver)
    rows = [("m_plus", rep.m_plus), ("m_minus", rep.m_minus), ("S", rep.S), ("rhs", rep.rhs),
            ("local_converged", rep.local.converged), ("mp_converged", rep.mountain.converged)]
    out.field("m_plus.dat", rep.local.state)
    out.field("m_minus.dat", rep.mountain.state)
    return [("margin", rep.margin)], {"gap": rows}, rep.passed


def _study_regime(cfg, prm, st, out):
    rows = studies.regime_map(st.Ns or (prm.N,), st.alphas or (prm.alpha,), st.ps or (prm.p,),
                              st.mu_values or (prm.mu,), st.cs or (cfg.c_spec or prm.c,))
    out.csv("regime.csv", ("N", "alpha", "p", "mu", "c", "statement", "levels"),
            [(*r[:6], " ".join(r[6])) for r in rows])
    block = [(f"row_{i}", f"N={r[0]} alpha={r[1]} p={r[2]} mu={r[3]} c={_fmt(r[4])}: {r[5]} "
              f"[{' '.join(r[6]) or 'none'}]") for i, r in enumerate(rows)]
    return [("rows", len(rows))], {"regime": block}, True


def _study_growth(cfg, prm, st, out):
    q = st.q if st.q is not None else 2 + 2 / prm.N
    try:
        rep = studies.growth_probe_B(q, prm.N)
    except ValueError as exc:
        raise RegimeError(str(exc)) from None
    rows = [("sup", rep.sup), ("argmax", rep.argmax), ("interior", rep.interior), ("nonnegative", rep.nonnegative)]
    return [("q", q)], {"growth": rows}, rep.passed


_STUDIES = {
    "continuation": _study_continuation,
    "nonexistence": _study_nonexistence,
    "unbounded": _study_unbounded,
    "gap": _study_gap,
    "regime": _study_regime,
    "growth": _study_growth,
}


# --- sweep ----------------------------------------------------------------------


def expand_sweep(text: str) -> list[str]:
    """One config text per point of the Cartesian product of list values.

    Comma lists in ``[problem]``, ``[grid]`` and ``[solver]`` are swept;
    each expanded text keeps the original line numbering.
    """
    lines = text.splitlines()
    axes = []
    section = ""
    for i, raw in enumerate(lines):
        line = raw.split("#", 1)[0].strip()
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if section in ("problem", "grid", "solver") and "=" in line:
            key, value = (x.strip() for x in line.split("=", 1))
            items = [x.strip() for x in value.split(",") if x.strip()]
            if len(items) > 1:
                axes.append((i, key, items))
    texts = []
    for combo in itertools.product(*(a[2] for a in axes)):
        new = list(lines)
        for (i, key, _), v in zip(axes, combo):
            new[i] = f"{key} = {v}"
        texts.append("\n".join(new) + "\n")
    return texts


def _sweep_member(args):
    text, command, option, directory, seed = args
    try:
        cfg = parse_config(text)
    except ConfigError:
        return EXIT_REGIME
    if seed is not None:
        cfg = cfg.replace(seed=seed)
    out = _Out(cfg, directory)
    out.dir.mkdir(parents=True, exist_ok=True)
    (out.dir / "config.txt").write_text(format_config(cfg))
    with contextlib.redirect_stdout(io.StringIO()):
        if command == "solve":
            return cmd_solve(cfg, option, out)
        return cmd_study(cfg, option, out)


def cmd_sweep(text: str, cfg: RunConfig, out: _Out, level: str | None, kind: str | None, workers: int,
              seed: int | None = None) -> int:
    texts = expand_sweep(text)
    command, option = ("study", kind) if kind else ("solve", level or "global")
    jobs = [(t, command, option, str(out.dir / f"run_{i:03d}"), seed) for i, t in enumerate(texts)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            codes = list(ex.map(_sweep_member, jobs))
    else:
        codes = [_sweep_member(j) for j in jobs]
    rows = [(Path(j[3]).name, code) for j, code in zip(jobs, codes)]
    out.csv("sweep.csv", ("run", "exit_code"), rows)
    text_out = render_report([("command", "sweep"), ("target", f"{command} {option}"), ("runs", len(jobs))],
                             cfg, {"runs": rows})
    out.text("sweep.txt", text_out)
    print(text_out, end="")
    return max(codes, default=EXIT_OK)


# --- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lognls", description="Normalized solutions of log-NLS with a power term.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", default=None, help="output directory (overrides [output] directory)")
        p.add_argument("--seed", type=int, default=None)
        return p

    p = common(sub.add_parser("solve", help="run one solver level"))
    p.add_argument("--level", choices=sorted(LEVELS), default="global")
    p = common(sub.add_parser("fiber", help="fibre map samples and roots"))
    p.add_argument("--family", choices=("gaussian", "weinstein", "bubble", "random"), default="gaussian")
    p.add_argument("--field", default=None, help="field file to analyse instead of a family")
    p.add_argument("--s-min", type=float, default=-4.0)
    p.add_argument("--s-max", type=float, default=4.0)
    p.add_argument("--samples", type=int, default=401)
    common(sub.add_parser("thresholds", help="existence gates for the config"))
    common(sub.add_parser("gnconst", help="Gagliardo-Nirenberg and Sobolev constants"))
    p = common(sub.add_parser("study", help="run a study driver"))
    p.add_argument("--kind", choices=KINDS, required=True)
    p = common(sub.add_parser("sweep", help="run a config with list values over its Cartesian product"))
    p.add_argument("--level", choices=sorted(LEVELS), default=None)
    p.add_argument("--kind", choices=KINDS, default=None)
    p.add_argument("--workers", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        if args.command == "sweep":
            texts = expand_sweep(text)
            cfg = parse_config(texts[0])
        else:
            cfg = parse_config(text)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_REGIME
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    out = _Out(cfg, args.out)
    try:
        if args.command == "solve":
            return cmd_solve(cfg, args.level, out)
        if args.command == "fiber":
            return cmd_fiber(cfg, out, args.family, args.field, args.s_min, args.s_max, args.samples)
        if args.command == "thresholds":
            return cmd_thresholds(cfg, out)
        if args.command == "gnconst":
            return cmd_gnconst(cfg, out)
        if args.command == "study":
            return cmd_study(cfg, args.kind, out)
        return cmd_sweep(text, cfg, out, args.level, args.kind, args.workers, args.seed)
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
