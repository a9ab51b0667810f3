"""Command-line driver: run, convergence, regrid, analyze.

Configuration files are flat ``key = value`` text with ``#`` comments.
Exit codes: 0 ok, 2 configuration error, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import spectral as sp
from .analysis import Neck, ScalingSeries, fit_scaling, follow_neck, track_neck
from .biot_savart import DegenerateGeometryError, check_quad_nodes, default_quad_nodes
from .curve import (CurveState, DerivedGeometry, center_midplane, enclosed_volume, from_polar,
                    reconstruct)
from .meshref import GuidelineParams, build_guideline
from .reparam import geometric_distance, to_uniform
from .timestep import StepConfig, StepError, rk4_step

log = logging.getLogger("sheetflow")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SNAPSHOT_HEADER = "alpha,r,z,theta,s_alpha,gamma,kappa_z,kappa_r,GL"
DIAG_HEADER = "step,t,L,ds_min,r_min,z_min,volume,closure_residual,cfl_ratio,filtered_modes"

# Filter level used with each stepsize in convergence studies (dt -> eps_K);
# larger steps sit closer to the stability bound and need stronger filtering.
DEFAULT_EPS_SCHEDULE = {4e-3: 1e-11, 2e-3: 1e-12, 1e-3: 1e-13, 5e-4: 1e-13,
                        2.5e-4: 1e-14, 1e-4: 1e-14, 1e-5: 1e-14}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "custom"
    N: int = 256
    dt: float = 1e-3
    eps_K: float = 1e-11
    sigma: float = 0.2
    gamma0: str = "0"
    radius: float = 1.0
    a: float = 20.0
    d: float = 5.0
    delta_R: float = 0.125
    k_max: int | None = None
    N_up: int | None = None
    eps_rel: float = 1e-15
    M_quad: int | None = None
    C_cfl: float = 2.5
    t_end: float = 1.0
    snapshot_every: int = 100
    outdir: str = "out"
    z_anchor: str = "0"
    threads: int = 1
    stop_r_min: float = 0.0
    uniform_mesh: bool = False
    resume: bool = True
    p2_eps: float = 2.0 / 7.0
    p2_ns: str = "16,32,48,64,96,128,160,192,256"
    ref_dt: float = 1e-5
    ref_eps_K: float = 1e-14
    eps_schedule: str = ""

    def guideline(self) -> GuidelineParams:
        return GuidelineParams(a=self.a, d=self.d, delta_R=self.delta_R, k_max=self.k_max,
                               N_up=self.N_up, eps_rel=self.eps_rel)

    def step_config(self, dt: float | None = None, eps_K: float | None = None) -> StepConfig:
        return StepConfig(dt=self.dt if dt is None else dt,
                          eps_K=self.eps_K if eps_K is None else eps_K,
                          C_cfl=self.C_cfl, M_quad=self.M_quad, guideline=self.guideline(),
                          uniform_mesh=self.uniform_mesh)

    def schedule(self) -> dict[float, float]:
        table = dict(DEFAULT_EPS_SCHEDULE)
        for item in filter(None, (s.strip() for s in self.eps_schedule.split(","))):
            dt, eps = item.split(":")
            table[float(dt)] = float(eps)
        return table

    def eps_for(self, dt: float) -> float:
        for key, eps in self.schedule().items():
            if math.isclose(key, dt, rel_tol=1e-9):
                return eps
        return self.eps_K


PRESETS = {
    "pinchoff": dict(sigma=0.2, gamma0="-2*sin(2*alpha)", N=2048, dt=5e-5, eps_K=1e-11,
                     t_end=1.9, z_anchor="midplane"),
    "bagbreakup": dict(sigma=0.04, gamma0="-sin(alpha)", N=2048, dt=5e-5, eps_K=1e-11,
                       t_end=4.9, z_anchor="-1"),
    "p2test": dict(),
    "custom": dict(),
}

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(name: str, text: str):
    ftype = str(_FIELDS[name].type)
    if text.lower() in ("none", "") and "None" in ftype:
        return None
    if ftype.startswith("bool"):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {text!r}")
    if ftype.startswith("int"):
        try:
            v = float(text)
        except ValueError:
            raise ConfigError(f"{name}: expected an integer, got {text!r}") from None
        if v != int(v):
            raise ConfigError(f"{name}: expected an integer, got {text!r}")
        return int(v)
    if ftype.startswith("float"):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{name}: expected a number, got {text!r}") from None
    return text


def parse_config_text(text: str) -> RunConfig:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        pairs[key] = value
    problem = pairs.get("problem", "custom")
    if problem not in PRESETS:
        raise ConfigError(f"unknown problem {problem!r}; choose from {sorted(PRESETS)}")
    cfg = RunConfig(problem=problem, **PRESETS[problem])
    for key, value in pairs.items():
        setattr(cfg, key, _convert(key, value))
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config_text(text)


def validate(cfg: RunConfig) -> None:
    try:
        sp.check_grid(cfg.N)
        cfg.guideline().resolved(cfg.N)
        check_quad_nodes(cfg.N, cfg.M_quad or default_quad_nodes(cfg.N))
        StepConfig(dt=cfg.dt, eps_K=cfg.eps_K)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not cfg.t_end > 0.0:
        raise ConfigError("t_end must be positive")
    if cfg.snapshot_every < 1:
        raise ConfigError("snapshot_every must be >= 1")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    if cfg.sigma < 0.0:
        raise ConfigError("sigma must be non-negative")
    if cfg.z_anchor != "midplane":
        try:
            float(cfg.z_anchor)
        except ValueError:
            raise ConfigError("z_anchor must be a number or 'midplane'") from None
    if cfg.problem == "p2test":
        try:
            ns = p2_grid_sizes(cfg)
        except ValueError:
            raise ConfigError("p2_ns must be a comma-separated list of integers") from None
        for n in ns:
            try:
                sp.check_grid(n)
            except ValueError as exc:
                raise ConfigError(f"p2_ns: {exc}") from exc
    else:
        try:
            initial_state(cfg)
        except Exception as exc:  # expression errors of any kind
            raise ConfigError(f"gamma0: {exc}") from exc


_EXPR_NAMES = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "pi": np.pi,
               "tanh": np.tanh, "abs": np.abs}


def eval_gamma0(expr: str, alpha: np.ndarray) -> np.ndarray:
    """Evaluate an initial sheet strength expression in the variable alpha."""
    val = eval(expr, {"__builtins__": {}}, {**_EXPR_NAMES, "alpha": alpha})  # noqa: S307
    out = np.broadcast_to(np.asarray(val, dtype=np.float64), alpha.shape).copy()
    if not np.all(np.isfinite(out)):
        raise ValueError("expression produced non-finite values")
    return out


def initial_state(cfg: RunConfig) -> CurveState:
    """Sphere of the configured radius with gamma from the configured expression."""
    a = sp.grid(cfg.N)
    return CurveState(0.0, a.copy(), np.full(cfg.N, float(cfg.radius)),
                      eval_gamma0(cfg.gamma0, a), float(cfg.sigma))


def output_geometry(state: CurveState, z_anchor: str) -> DerivedGeometry:
    if z_anchor == "midplane":
        return center_midplane(reconstruct(state, 0.0))
    return reconstruct(state, float(z_anchor))


# ---------------------------------------------------------------- snapshots

def write_snapshot(path: Path, state: CurveState, geom: DerivedGeometry, gl: np.ndarray) -> None:
    cols = np.column_stack([state.alpha, geom.r, geom.z, state.theta, state.s_alpha, state.gamma,
                            geom.kappa_z, geom.kappa_r, gl])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        np.savetxt(fh, cols, fmt="%.17g", delimiter=",", header=SNAPSHOT_HEADER, comments="")


def read_snapshot(path: Path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.asarray(data[name], dtype=np.float64) for name in data.dtype.names}


def write_meta(path: Path, **values) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in values.items():
            if isinstance(v, (bool, np.bool_)) or v is None or isinstance(v, str):
                text = str(v)
            elif isinstance(v, (int, np.integer)):
                text = str(int(v))
            else:
                text = f"{float(v):.17g}"
            fh.write(f"{k} = {text}\n")


def read_meta(path: Path) -> dict[str, float | str | None]:
    out: dict[str, float | str | None] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, v = (s.strip() for s in line.split("=", 1))
            if v == "None":
                out[k] = None
            else:
                try:
                    out[k] = float(v)
                except ValueError:
                    out[k] = v
    return out


def _snap_name(step: int) -> str:
    return f"snap_{step:08d}.csv"


def _latest_snapshot(outdir: Path) -> int | None:
    steps = [int(p.stem.split("_")[1]) for p in outdir.glob("snap_*.csv")
             if p.stem.split("_")[1].isdigit() and (outdir / f"meta_{p.stem.split('_')[1]}.txt").exists()]
    return max(steps) if steps else None


@dataclass
class RunWriter:
    cfg: RunConfig
    outdir: Path
    neck_alpha: float | None = None
    diag_rows: list[str] = field(default_factory=list)

    def neck(self, geom: DerivedGeometry) -> Neck | None:
        nk = follow_neck(track_neck(geom), self.neck_alpha)
        if nk is not None:
            self.neck_alpha = nk.alpha
        return nk

    def snapshot(self, step: int, state: CurveState, R_prev: np.ndarray | None,
                 geom: DerivedGeometry, prefix: str = "snap") -> None:
        gl = build_guideline(state, geom, self.cfg.guideline()).gl_at_nodes
        write_snapshot(self.outdir / f"{prefix}_{step:08d}.csv", state, geom, gl)
        # companions of a post-mortem dump must not replace a regular snapshot's
        extra = "" if prefix == "snap" else f"{prefix}_"
        write_meta(self.outdir / f"{extra}meta_{step:08d}.txt", t=state.t, L=geom.L, dt=self.cfg.dt,
                   step=step, N=state.n, sigma=state.sigma, neck_alpha=self.neck_alpha)
        if R_prev is not None:
            with open(self.outdir / f"{extra}rprev_{step:08d}.csv", "w", encoding="utf-8",
                      newline="\n") as fh:
                np.savetxt(fh, R_prev, fmt="%.17g", header="R", comments="")

    def diag(self, step: int, state: CurveState, geom: DerivedGeometry, nk: Neck | None,
             cfl: float, filtered: int) -> None:
        r_min, z_min = (nk.r_min, nk.z_min) if nk is not None else (math.nan, math.nan)
        row = [step, state.t, geom.L, geom.ds_min, r_min, z_min, enclosed_volume(geom),
               geom.closure_residual, cfl, filtered]
        line = ",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row)
        with open(self.outdir / "diag.csv", "a", encoding="utf-8", newline="\n") as fh:
            fh.write(line + "\n")


def _truncate_diag(path: Path, last_step: int) -> None:
    if not path.exists():
        return
    lines = path.read_text(encoding="utf-8").splitlines()
    keep = [lines[0]] + [ln for ln in lines[1:] if ln and int(ln.split(",")[0]) <= last_step]
    path.write_text("\n".join(keep) + "\n", encoding="utf-8")


def load_resume(outdir: Path, cfg: RunConfig):
    """(step, state, R_prev, neck_alpha) from the latest snapshot, or None."""
    step = _latest_snapshot(outdir)
    if step is None:
        return None
    snap = read_snapshot(outdir / _snap_name(step))
    meta = read_meta(outdir / f"meta_{step:08d}.txt")
    if int(meta["N"]) != cfg.N:
        raise ConfigError(f"cannot resume: snapshot has N={int(meta['N'])}, config N={cfg.N}")
    state = CurveState(meta["t"], snap["theta"], snap["s_alpha"], snap["gamma"], meta["sigma"])
    rp = outdir / f"rprev_{step:08d}.csv"
    R_prev = np.loadtxt(rp, skiprows=1) if rp.exists() else None
    return step, state, R_prev, meta.get("neck_alpha")


def run(cfg: RunConfig) -> int:
    """Time loop with snapshots and diagnostics; returns an exit status."""
    validate(cfg)
    if cfg.problem == "p2test":
        return run_p2test(cfg)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    writer = RunWriter(cfg, outdir)
    step_cfg = cfg.step_config()
    resumed = load_resume(outdir, cfg) if cfg.resume else None
    if resumed is not None:
        step, state, R_prev, writer.neck_alpha = resumed
        _truncate_diag(outdir / "diag.csv", step)
        log.info("resuming from step %d, t=%.6g", step, state.t)
    else:
        step, state, R_prev = 0, initial_state(cfg), None
        (outdir / "diag.csv").write_text(DIAG_HEADER + "\n", encoding="utf-8")
        geom = output_geometry(state, cfg.z_anchor)
        nk = writer.neck(geom)
        writer.diag(0, state, geom, nk, math.nan, 0)
        writer.snapshot(0, state, None, geom)
    n_total = int(round(cfg.t_end / cfg.dt))
    v0 = None
    status, reason = EXIT_OK, "t_end reached"
    while step < n_total:
        try:
            new, R_base, d = rk4_step(state, R_prev, step_cfg)
            geom = output_geometry(new, cfg.z_anchor)
        except (StepError, DegenerateGeometryError, ValueError) as exc:
            last = exc.last_good if isinstance(exc, StepError) else state
            log.error("numerical abort at step %d: %s", step, exc)
            try:
                writer.snapshot(step, last, R_prev, output_geometry(last, cfg.z_anchor),
                                prefix="postmortem")
            except Exception:  # best effort
                log.exception("could not write post-mortem snapshot")
            status, reason = EXIT_NUMERIC, f"numerical abort: {exc}"
            break
        nk = writer.neck(geom)
        if nk is not None and nk.r_min <= 0.0:
            log.error("numerical abort at step %d: curve crossed the axis", step)
            writer.snapshot(step, state, R_prev, output_geometry(state, cfg.z_anchor),
                            prefix="postmortem")
            status, reason = EXIT_NUMERIC, "numerical abort: curve crossed the axis"
            break
        step += 1
        state, R_prev = new, R_base
        writer.diag(step, state, geom, nk, d.cfl_ratio, d.filtered_modes)
        v0 = v0 if v0 is not None else d.volume
        stop = cfg.stop_r_min > 0.0 and nk is not None and nk.r_min <= cfg.stop_r_min
        if step % cfg.snapshot_every == 0 or step == n_total or stop:
            writer.snapshot(step, state, R_prev, geom)
        if stop:
            reason = f"r_min <= {cfg.stop_r_min}"
            break
    geom = output_geometry(state, cfg.z_anchor)
    write_meta(outdir / "summary.txt", status=status, steps=step, t=state.t, L=geom.L,
               volume=enclosed_volume(geom), min_s_alpha_over_uniform=float(
                   np.min(state.s_alpha) / (geom.L / np.pi)))
    with open(outdir / "summary.txt", "a", encoding="utf-8") as fh:
        fh.write(f"reason = {reason!r}\n")
    return status


# ------------------------------------------------------------ p2 sweep

def p2_grid_sizes(cfg: RunConfig) -> list[int]:
    return [int(s) for s in cfg.p2_ns.split(",") if s.strip()]


def p2_curve(n: int, eps: float, sigma: float = 0.2) -> CurveState:
    """r = eta sin(phi), z = -eta cos(phi), eta = 1 + eps P2(cos phi), sampled at phi = alpha."""
    eta, deta, d2eta = p2_functions(eps)
    return from_polar(eta, deta, d2eta, n, sigma=sigma)


def p2_functions(eps: float):
    def eta(p):
        return 1.0 + eps * 0.5 * (3.0 * np.cos(p) ** 2 - 1.0)

    def deta(p):
        return -3.0 * eps * np.cos(p) * np.sin(p)

    def d2eta(p):
        return -3.0 * eps * np.cos(2.0 * p)

    return eta, deta, d2eta


def p2_uniform_error(n: int, eps: float) -> tuple[float, float]:
    """Relative max errors in r and z of the uniformized P2 curve, measured
    against the polar formula through the inverse mapping (r, z) -> phi."""
    eta, _, _ = p2_functions(eps)
    st = p2_curve(n, eps)
    z0 = -float(eta(0.0))
    u = to_uniform(st, reconstruct(st, z0))
    g = reconstruct(u.as_state(), z0)
    phi = np.arctan2(g.r, -g.z)
    r_ex = eta(phi) * np.sin(phi)
    z_ex = -eta(phi) * np.cos(phi)
    err_r = float(np.max(np.abs(g.r - r_ex)) / np.max(np.abs(g.r)))
    err_z = float(np.max(np.abs(g.z - z_ex)) / np.max(np.abs(g.z)))
    return err_r, err_z


def run_p2test(cfg: RunConfig) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "p2_convergence.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("N,err_r,err_z\n")
        for n in p2_grid_sizes(cfg):
            er, ez = p2_uniform_error(n, cfg.p2_eps)
            fh.write(f"{n},{er:.17g},{ez:.17g}\n")
            log.info("N=%d err_r=%.3e err_z=%.3e", n, er, ez)
    return EXIT_OK


# ------------------------------------------------------------ convergence

@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    eps_K: float
    raw: float
    regridded: float


@dataclass(frozen=True)
class ConvergenceTable:
    rows: list[ConvergenceRow]
    ref_dt: float
    order_raw: float
    order_regridded: float


def evolve(cfg: RunConfig, dt: float, eps_K: float, t_end: float) -> CurveState:
    step_cfg = cfg.step_config(dt=dt, eps_K=eps_K)
    state, R_prev = initial_state(cfg), None
    for _ in range(int(round(t_end / dt))):
        state, R_prev, _ = rk4_step(state, R_prev, step_cfg)
    return state


def raw_distance(a: CurveState, b: CurveState, z_anchor: float = 0.0) -> float:
    """max |X_a - X_b| / max |X_b| at equal alpha (no regridding)."""
    ga, gb = reconstruct(a, z_anchor), reconstruct(b, z_anchor)
    return float(np.max(np.hypot(ga.r - gb.r, ga.z - gb.z)) / np.max(np.hypot(gb.r, gb.z)))


def observed_order(dts, errors) -> float:
    """Least-squares slope of log(error) against log(dt)."""
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


def convergence_study(cfg: RunConfig, dts, ref_dt: float | None = None, t_end: float = 0.5,
                      reference: CurveState | None = None, runner=evolve) -> ConvergenceTable:
    dts = sorted((float(x) for x in dts), reverse=True)
    ref_dt = cfg.ref_dt if ref_dt is None else ref_dt
    if len(dts) < 3:
        raise ConfigError("need at least three stepsizes to estimate an order")
    if not ref_dt < min(dts):
        raise ConfigError("reference dt must be smaller than every dt in the study")
    if reference is None:
        reference = runner(cfg, ref_dt, cfg.ref_eps_K, t_end)
    rows = []
    for dt in dts:
        eps = cfg.eps_for(dt)
        st = runner(cfg, dt, eps, t_end)
        rows.append(ConvergenceRow(dt, eps, raw_distance(st, reference),
                                   geometric_distance(st, reference)))
        log.info("dt=%g raw=%.3e regridded=%.3e", dt, rows[-1].raw, rows[-1].regridded)
    return ConvergenceTable(rows, ref_dt, observed_order(dts, [r.raw for r in rows]),
                            observed_order(dts, [r.regridded for r in rows]))


def write_convergence(table: ConvergenceTable, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("dt,eps_K,raw,regridded\n")
        for r in table.rows:
            fh.write(f"{r.dt:.17g},{r.eps_K:.17g},{r.raw:.17g},{r.regridded:.17g}\n")
        fh.write(f"# ref_dt={table.ref_dt:g} order_raw={table.order_raw:.4f} "
                 f"order_regridded={table.order_regridded:.4f}\n")


# ------------------------------------------------------------ regrid / analyze

def regrid_snapshot(path: Path) -> Path:
    snap = read_snapshot(path)
    step = path.stem.split("_")[-1]
    meta_path = path.with_name(f"meta_{step}.txt")
    meta = read_meta(meta_path) if meta_path.exists() else {"t": 0.0, "sigma": 0.0}
    state = CurveState(meta["t"], snap["theta"], snap["s_alpha"], snap["gamma"], meta["sigma"])
    z0 = float(snap["z"][0])
    u = to_uniform(state, reconstruct(state, z0))
    ustate = u.as_state()
    geom = reconstruct(ustate, z0)
    gl = build_guideline(ustate, geom, GuidelineParams()).gl_at_nodes
    out = path.with_name(f"{path.stem}_uniform.csv")
    write_snapshot(out, ustate, geom, gl)
    return out


def analyze_diag(path: Path, window=None):
    data = np.genfromtxt(path, delimiter=",", names=True)
    m = np.isfinite(data["r_min"]) & (data["r_min"] > 0)
    series = ScalingSeries(data["t"][m], data["r_min"][m], data["z_min"][m])
    return fit_scaling(series, None if window is None else tuple(window))


# ------------------------------------------------------------ entry point

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sheetflow", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="time-integrate a configured problem")
    r.add_argument("config")
    c = sub.add_parser("convergence", help="stepsize convergence study at t = 0.5")
    c.add_argument("config")
    c.add_argument("--dts", type=float, nargs="+", required=True)
    c.add_argument("--ref-dt", type=float, default=None)
    c.add_argument("--t", type=float, default=0.5)
    g = sub.add_parser("regrid", help="write the uniform-arclength version of a snapshot")
    g.add_argument("snapshot")
    a = sub.add_parser("analyze", help="fit the pinch-off scaling law to diag.csv")
    a.add_argument("diag")
    a.add_argument("--window", type=float, nargs=2, default=None, metavar=("T_A", "T_B"))
    return p


def _set_threads(n: int) -> None:
    import numba

    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            _set_threads(cfg.threads)
            return run(cfg)
        if args.command == "convergence":
            cfg = load_config(args.config)
            _set_threads(cfg.threads)
            table = convergence_study(cfg, args.dts, args.ref_dt, args.t)
            out = Path(cfg.outdir)
            out.mkdir(parents=True, exist_ok=True)
            write_convergence(table, out / "convergence.csv")
            for row in table.rows:
                print(f"dt={row.dt:g} eps_K={row.eps_K:g} raw={row.raw:.6e} regridded={row.regridded:.6e}")
            print(f"order_raw={table.order_raw:.4f} order_regridded={table.order_regridded:.4f}")
            return EXIT_OK
        if args.command == "regrid":
            print(regrid_snapshot(Path(args.snapshot)))
            return EXIT_OK
        if args.command == "analyze":
            fit = analyze_diag(Path(args.diag), args.window)
            for k, v in dataclasses.asdict(fit).items():
                print(f"{k} = {v}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepError, DegenerateGeometryError, ArithmeticError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
