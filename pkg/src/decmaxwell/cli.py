"""Batch entry point: mesh -> Betti numbers -> decomposition -> gauge fixing ->
evolution -> state construction -> verification.

Every subcommand reads one JSON config (``--config``), optionally overridden by
flags, and writes CSV/JSON artifacts into the output directory. Exit codes:
0 all checks pass, 1 a check or module failed, 2 the config is unusable.
Failures print ``ERROR,<code>,<message>`` on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import _json
from .cochain import cochain_from_csv, cochain_to_csv, inner_sobolev, norm_l2, norm_sobolev, random_cochain
from .complex import load_complex, make_circle, make_icosphere, make_torus_lattice, save_complex, validate
from .errors import ConfigError, DecError
from .evolution import energy, evolve_maxwell, maxwell_residual, TimeSeries
from .hadamard import DEFAULT_TOLERANCES, build_suite, verify_state
from .hodge import build_caches, coulomb_projector, hodge_decompose
from .maxwell import (
    GaugeRange,
    check_constraints,
    gauge_fix,
    k_sigma_dagger,
    load_maxwell,
    maxwell_to_text,
    random_constrained,
    save_maxwell,
    t_sigma,
)
from .report import Report, _num
from .rng import generator

SUBCOMMANDS = ("mesh-gen", "betti", "decompose", "gauge-fix", "evolve", "build-state", "verify-state", "all")

GENERATORS = {
    "torus_lattice": (make_torus_lattice, {"nx": int, "ny": int, "lx": float, "ly": float}),
    "icosphere": (make_icosphere, {"subdivisions": int, "radius": float}),
    "circle": (make_circle, {"n": int, "length": float}),
}

DEFAULT_CONFIG = {
    "mesh": {"generator": "torus_lattice", "params": {"nx": 4, "ny": 4, "lx": 1.0, "ly": 1.0}},
    "mu": 1.0,
    "harmonic_tol": None,
    "harmonic_rel_tol": 1e-8,
    "sobolev_grid": [0.0, 1.0, 2.0],
    "time_grid": {"t0": 0.0, "t1": 10.0, "samples": 21},
    "trials": 500,
    "seed": 0,
    "output_dir": "out",
    "tolerances": {},
}


@dataclass(frozen=True)
class RunConfig:
    mesh: dict
    mu: float = 1.0
    harmonic_tol: float | None = None
    harmonic_rel_tol: float = 1e-8
    sobolev_grid: tuple = (0.0, 1.0, 2.0)
    t0: float = 0.0
    t1: float = 10.0
    samples: int = 21
    trials: int = 500
    seed: int = 0
    output_dir: str = "out"
    tolerances: dict = field(default_factory=dict)
    base_dir: str = "."


def _num_field(doc, key, kind, positive=False, minimum=None):
    v = doc[key]
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{key} must be an integer")
    else:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{key} must be a finite number")
        v = float(v)
    if positive and not v > 0:
        raise ConfigError(f"{key} must be positive")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{key} must be >= {minimum}")
    return v


def parse_config(doc, base_dir=".") -> RunConfig:
    """Validate a config document; raises ConfigError with a readable message."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = {**DEFAULT_CONFIG, **doc}

    mesh = merged["mesh"]
    if not isinstance(mesh, dict):
        raise ConfigError("mesh must be an object")
    if "file" in mesh:
        if set(mesh) != {"file"} or not isinstance(mesh["file"], str):
            raise ConfigError("mesh file spec is {\"file\": <path>}")
    else:
        gen = mesh.get("generator")
        if gen not in GENERATORS:
            raise ConfigError(f"mesh.generator must be one of {', '.join(GENERATORS)}")
        params = mesh.get("params", {})
        if not isinstance(params, dict) or set(mesh) - {"generator", "params"}:
            raise ConfigError("mesh spec is {\"generator\": ..., \"params\": {...}}")
        sig = GENERATORS[gen][1]
        if set(params) != set(sig):
            raise ConfigError(f"{gen} needs params {sorted(sig)}")
        for k, t in sig.items():
            _num_field(params, k, t)

    mu = _num_field(merged, "mu", float, positive=True)
    ht = merged["harmonic_tol"]
    if ht is not None:
        ht = _num_field(merged, "harmonic_tol", float, positive=True)
    hrt = _num_field(merged, "harmonic_rel_tol", float, positive=True)
    grid = merged["sobolev_grid"]
    if not isinstance(grid, list) or not grid:
        raise ConfigError("sobolev_grid must be a non-empty list")
    grid = tuple(_num_field({"s": s}, "s", float, minimum=0.0) for s in grid)
    tg = merged["time_grid"]
    if not isinstance(tg, dict) or set(tg) != {"t0", "t1", "samples"}:
        raise ConfigError("time_grid needs t0, t1, samples")
    t0 = _num_field(tg, "t0", float)
    t1 = _num_field(tg, "t1", float)
    ns = _num_field(tg, "samples", int, minimum=3)
    if not t1 > t0:
        raise ConfigError("time_grid.t1 must exceed t0")
    trials = _num_field(merged, "trials", int, minimum=1)
    seed = _num_field(merged, "seed", int, minimum=0)
    if seed >= 2**64:
        raise ConfigError("seed must fit in 64 bits")
    out = merged["output_dir"]
    if not isinstance(out, str) or not out:
        raise ConfigError("output_dir must be a non-empty string")
    tols = merged["tolerances"]
    if not isinstance(tols, dict):
        raise ConfigError("tolerances must be an object")
    for k, v in tols.items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {k!r}")
        v = _num_field(tols, k, float)
        if k != "positivity" and not v > 0:
            raise ConfigError(f"tolerance {k} must be positive")
    return RunConfig(
        mesh=mesh, mu=mu, harmonic_tol=ht, harmonic_rel_tol=hrt, sobolev_grid=grid,
        t0=t0, t1=t1, samples=ns, trials=trials, seed=seed, output_dir=out,
        tolerances={k: float(v) for k, v in tols.items()}, base_dir=base_dir,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    return parse_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# helpers


class Context:
    """Lazily built shared state for one run."""

    def __init__(self, cfg: RunConfig, out: str, quiet: bool):
        self.cfg = cfg
        self.out = out
        self.quiet = quiet
        self._mesh = None
        self._caches = None
        self._Pi = None

    def say(self, text):
        if not self.quiet:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")

    def path(self, *parts):
        p = os.path.join(self.out, *parts)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        return p

    @property
    def mesh(self):
        if self._mesh is None:
            m = self.cfg.mesh
            if "file" in m:
                f = m["file"]
                if not os.path.isabs(f):
                    f = os.path.join(self.cfg.base_dir, f)
                self._mesh = load_complex(f)
            else:
                fn, sig = GENERATORS[m["generator"]]
                self._mesh = fn(**{k: t(m["params"][k]) for k, t in sig.items()})
        return self._mesh

    @property
    def caches(self):
        if self._caches is None:
            self._caches = build_caches(
                self.mesh, harmonic_tol=self.cfg.harmonic_tol, rel_tol=self.cfg.harmonic_rel_tol
            )
        return self._caches

    @property
    def Pi(self):
        if self._Pi is None:
            self._Pi = coulomb_projector(self.caches[0], self.caches[1])
        return self._Pi

    def rng(self, *stream):
        return generator(self.cfg.seed, *stream)


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _complex_matrix(A):
    A = np.asarray(A)
    return {"shape": list(A.shape), "re": np.real(A), "im": np.imag(A)}


# ---------------------------------------------------------------------------
# subcommands; each returns a Report


def cmd_mesh_gen(ctx: Context) -> Report:
    save_complex(ctx.mesh, ctx.path("mesh.json"))
    rep = validate(ctx.mesh)
    _write(ctx.path("validation.csv"), rep.to_csv())
    ctx.say(f"mesh {ctx.mesh.meta.get('generator', 'file')}: counts {ctx.mesh.counts}, "
            f"euler {ctx.mesh.euler_characteristic}")
    return rep


def cmd_betti(ctx: Context) -> Report:
    rows = []
    for k in range(ctx.mesh.dim + 1):
        c = ctx.caches[k]
        rows.append([k, c.n_harmonic, float(c.smallest_nonzero)])
    text = _csv(rows, ["k", "b_k", "smallest_nonzero_eigenvalue"])
    _write(ctx.path("betti.csv"), text)
    ctx.say(text)
    rep = Report()
    euler = sum((-1) ** k * r[1] for k, r in enumerate(rows))
    rep.add("euler_poincare", abs(euler - ctx.mesh.euler_characteristic), 0)
    return rep


def cmd_decompose(ctx: Context, input_path=None) -> Report:
    """Hodge-split random cochains of every degree (or a given cochain)."""
    mesh, caches = ctx.mesh, ctx.caches
    tol = 1e-10
    if input_path:
        with open(input_path) as fh:
            omegas = [cochain_from_csv(fh.read(), mesh)]
    else:
        omegas = [random_cochain(mesh, k, ctx.rng("decompose", k)) for k in range(mesh.dim + 1)]
    rows, rep = [], Report()
    worst_rec, worst_orth = 0.0, 0.0
    for om in omegas:
        sp = hodge_decompose(om, caches)
        rec = norm_l2(sp.reconstruct() - om) / max(norm_l2(om), 1e-300)
        worst_rec = max(worst_rec, rec)
        parts = (sp.exact, sp.coexact, sp.harmonic)
        for s in ctx.cfg.sobolev_grid:
            c = caches[om.degree]
            n2 = norm_sobolev(om, s, c) ** 2
            orth = max(abs(inner_sobolev(parts[i], parts[j], s, c))
                       for i, j in ((0, 1), (0, 2), (1, 2))) / max(n2, 1e-300)
            worst_orth = max(worst_orth, orth)
            rows.append([om.degree, float(s), rec, orth] + [norm_sobolev(p, s, c) for p in parts])
        for name, p in (("input", om), ("exact", sp.exact), ("coexact", sp.coexact), ("harmonic", sp.harmonic)):
            _write(ctx.path("decompose", f"degree{om.degree}_{name}.csv"), cochain_to_csv(p))
    _write(ctx.path("decompose.csv"), _csv(rows, [
        "degree", "s", "reconstruction_error", "orthogonality_defect",
        "norm_exact", "norm_coexact", "norm_harmonic"]))
    rep.add("reconstruction", worst_rec, tol)
    rep.add("orthogonality", worst_orth, tol)
    ctx.say(f"decompose: reconstruction {worst_rec:.3e}, orthogonality {worst_orth:.3e}")
    return rep


def _input_data(ctx, input_path):
    if input_path:
        return load_maxwell(input_path, ctx.mesh)
    return random_constrained(ctx.mesh, ctx.rng("gauge-fix"), ctx.Pi)


def cmd_gauge_fix(ctx: Context, input_path=None) -> Report:
    f = _input_data(ctx, input_path)
    fixed, gauge = gauge_fix(f, ctx.caches[0])
    save_maxwell(f, ctx.path("gauge_fix", "input.maxwell"))
    save_maxwell(fixed, ctx.path("gauge_fix", "fixed.maxwell"))
    _write(ctx.path("gauge_fix", "gauge.csv"),
           "[a]\n" + cochain_to_csv(gauge.a) + "[pi]\n" + cochain_to_csv(gauge.pi))
    cr = check_constraints(fixed)
    rep = cr.to_report()
    scale = max(f.norm(), 1.0)
    rep.add("equals_t_sigma", (fixed - t_sigma(f, ctx.Pi)).norm() / scale, 1e-9)
    rep.add("difference_in_gauge_range",
            GaugeRange(ctx.mesh).relative_residual((f - fixed).to_vector(), f.to_vector()), 1e-8)
    text = rep.to_csv()
    _write(ctx.path("gauge_fix", "constraints.csv"), text)
    ctx.say(text)
    return rep


def cmd_evolve(ctx: Context, input_path=None, t0=None, t1=None, samples=None, grid=None) -> Report:
    cfg = ctx.cfg
    t0 = cfg.t0 if t0 is None else t0
    t1 = cfg.t1 if t1 is None else t1
    samples = cfg.samples if samples is None else samples
    grid = cfg.sobolev_grid if grid is None else grid
    if input_path:
        f = load_maxwell(input_path, ctx.mesh)
    else:
        f, _ = gauge_fix(random_constrained(ctx.mesh, ctx.rng("evolve"), ctx.Pi), ctx.caches[0])
    times = np.linspace(t0, t1, samples)
    series = [evolve_maxwell(f, float(t), ctx.caches) for t in times]
    width = max(4, len(str(samples - 1)))
    for i, g in enumerate(series):
        _write(ctx.path("evolve", f"sample_{i:0{width}d}.maxwell"), maxwell_to_text(g))
    ts = TimeSeries(times, series)
    recs = energy(ts, grid, ctx.caches)
    rows = [[r.t, s, r.energies[s], r.etilde] for r in recs for s in grid]
    _write(ctx.path("evolve", "energy.csv"), _csv(rows, ["t", "s", "E_s", "Etilde"]))
    res = maxwell_residual(ts)
    _write(ctx.path("evolve", "maxwell_residual.csv"),
           _csv([[t, a, b] for t, (a, b) in zip(res.times, res.samples)], ["t", "residual_0", "residual_sigma"]))
    _write(ctx.path("evolve", "times.csv"), _csv([[i, float(t)] for i, t in enumerate(times)], ["index", "t"]))
    rep = Report()
    e0 = recs[0].etilde
    drift = max(abs(r.etilde - e0) for r in recs) / (e0 if e0 > 0 else 1.0)
    rep.add("modified_energy_conservation", drift, 1e-10)
    viol = max(k_sigma_dagger(g).norm() for g in series) / max(f.norm(), 1.0)
    rep.add("constraint_propagation", viol, 1e-9)
    ctx.say(f"evolve: {samples} samples on [{t0}, {t1}], energy drift {drift:.3e}")
    return rep


def _suite(ctx, mesh=None, mu=None):
    mesh = mesh or ctx.mesh
    caches = ctx.caches if mesh is ctx.mesh else build_caches(
        mesh, harmonic_tol=ctx.cfg.harmonic_tol, rel_tol=ctx.cfg.harmonic_rel_tol)
    return build_suite(mesh, ctx.cfg.mu if mu is None else mu, caches)


def cmd_build_state(ctx: Context, mesh_path=None) -> Report:
    if mesh_path:
        ctx._mesh = load_complex(mesh_path)
        ctx._caches = ctx._Pi = None
    suite = _suite(ctx)
    doc = {"mu": suite.mu, "complex_hash": ctx.mesh.hash,
           "order": ["a0", "pi0", "aS", "piS"],
           "sizes": {"n0": ctx.mesh.n(0), "n1": ctx.mesh.n(1)},
           "matrices": {k: _complex_matrix(v) for k, v in suite.matrices().items()}}
    _json.dump(doc, ctx.path("state", "operators.json"))
    rep = verify_state(suite, ctx.cfg.trials, ctx.cfg.seed, ctx.cfg.tolerances)
    _write(ctx.path("state", "report.csv"), rep.to_csv())
    ctx.say(f"build-state: mu {suite.mu}, {len(rep.checks)} checks, "
            f"{'all pass' if rep.passed else str(len(rep.failures())) + ' failing'}")
    return rep


def cmd_verify_state(ctx: Context) -> Report:
    suite = _suite(ctx)
    rep = verify_state(suite, ctx.cfg.trials, ctx.cfg.seed, ctx.cfg.tolerances)
    text = rep.to_csv()
    _write(ctx.path("report.csv"), text)
    ctx.say(text)
    return rep


def cmd_all(ctx: Context) -> Report:
    summary = Report()
    for name, fn in (("mesh-gen", cmd_mesh_gen), ("betti", cmd_betti), ("decompose", cmd_decompose),
                     ("gauge-fix", cmd_gauge_fix), ("evolve", cmd_evolve),
                     ("build-state", cmd_build_state)):
        summary.extend(fn(ctx), prefix=f"{name}/")
    _write(ctx.path("report.csv"), summary.to_csv())
    ctx.say(f"all: {len(summary.checks)} checks, "
            f"{'all pass' if summary.passed else str(len(summary.failures())) + ' failing'}")
    return summary


# ---------------------------------------------------------------------------
# argument handling


def _parse_tolerances(text):
    """--tolerances accepts a JSON file path, inline JSON, or name=value pairs."""
    if os.path.exists(text):
        with open(text) as fh:
            return json.load(fh)
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    out = {}
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"bad tolerance spec {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"bad tolerance value {v!r}") from None
    return out


def _parse_grid(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad sobolev grid {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run config (defaults are used when omitted)")
    common.add_argument("--out", help="output directory (overrides config output_dir)")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--mu", type=float)
    common.add_argument("--quiet", action="store_true")
    p = _Parser(prog="decmaxwell", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name in ("decompose", "gauge-fix", "evolve"):
            sp.add_argument("--input", help="input cochain / MaxwellData file")
        if name == "evolve":
            sp.add_argument("--t0", type=float)
            sp.add_argument("--t1", type=float)
            sp.add_argument("--samples", type=int)
            sp.add_argument("--sobolev-grid", help="comma separated s values")
        if name == "build-state":
            sp.add_argument("--mesh", help="mesh JSON file (overrides the config mesh)")
        if name == "verify-state":
            sp.add_argument("--tolerances", help="JSON file, inline JSON or name=value list")
    return p


def _resolve(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config({})
    doc = {}
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.trials is not None:
        doc["trials"] = args.trials
    if args.mu is not None:
        doc["mu"] = args.mu
    if getattr(args, "tolerances", None):
        doc["tolerances"] = {**cfg.tolerances, **_parse_tolerances(args.tolerances)}
    tg = {"t0": cfg.t0, "t1": cfg.t1, "samples": cfg.samples}
    for k in ("t0", "t1", "samples"):
        v = getattr(args, k, None)
        if v is not None:
            tg[k] = v
    if getattr(args, "sobolev_grid", None):
        doc["sobolev_grid"] = _parse_grid(args.sobolev_grid)
    if doc or tg != {"t0": cfg.t0, "t1": cfg.t1, "samples": cfg.samples}:
        base = {
            "mesh": cfg.mesh, "mu": cfg.mu, "harmonic_tol": cfg.harmonic_tol,
            "harmonic_rel_tol": cfg.harmonic_rel_tol, "sobolev_grid": list(cfg.sobolev_grid),
            "time_grid": tg, "trials": cfg.trials, "seed": cfg.seed,
            "output_dir": cfg.output_dir, "tolerances": cfg.tolerances,
        }
        base.update(doc)
        cfg = replace(parse_config(base), base_dir=cfg.base_dir)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def run(command: str, cfg: RunConfig, quiet: bool = False, **opts) -> int:
    """Run one subcommand; returns the exit status."""
    out = cfg.output_dir
    ctx = Context(cfg, out, quiet)
    try:
        os.makedirs(out, exist_ok=True)
        if command == "mesh-gen":
            rep = cmd_mesh_gen(ctx)
        elif command == "betti":
            rep = cmd_betti(ctx)
        elif command == "decompose":
            rep = cmd_decompose(ctx, opts.get("input"))
        elif command == "gauge-fix":
            rep = cmd_gauge_fix(ctx, opts.get("input"))
        elif command == "evolve":
            rep = cmd_evolve(ctx, opts.get("input"))
        elif command == "build-state":
            rep = cmd_build_state(ctx, opts.get("mesh"))
        elif command == "verify-state":
            rep = cmd_verify_state(ctx)
        elif command == "all":
            rep = cmd_all(ctx)
        else:
            raise ConfigError(f"unknown subcommand {command!r}")
    except DecError as exc:
        _error(exc.code, str(exc))
        return 2 if isinstance(exc, ConfigError) else 1
    except (OSError, ValueError, KeyError) as exc:
        _error("io" if isinstance(exc, OSError) else "invalid_input", str(exc))
        return 1
    if not rep.passed:
        names = ";".join(c.name for c in rep.failures())
        _error("check_failed", f"failing checks: {names}")
        return 1
    return 0


def _error(code, message):
    message = " ".join(str(message).split())
    sys.stderr.write(f"ERROR,{code},{message}\n")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _resolve(args)
    except ConfigError as exc:
        _error(exc.code, str(exc))
        return 2
    opts = {}
    for k in ("input", "mesh"):
        v = getattr(args, k, None)
        if v:
            opts[k] = v
    return run(args.command, cfg, quiet=args.quiet, **opts)


if __name__ == "__main__":
    sys.exit(main())
