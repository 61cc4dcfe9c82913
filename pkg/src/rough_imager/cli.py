"""Command-line front end: ``rough-imager <mode> --config <file>``.

Scenario files are INI-style (``key = value`` in sections). A scenario may
name a preset in ``[scenario] preset``; explicit keys override the preset and
the preset overrides the built-in defaults. Every run writes a
``manifest.ini`` holding the fully resolved scenario, which can itself be
passed back as ``--config`` to repeat the run.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import logging
import math
import operator
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .forward import SolverError, eval_far_field, eval_near_field, near_grid, nodes_per_arc, solve_forward
from .geometry import PRESETS as PROFILE_PRESETS
from .geometry import ConfigurationError, SurfaceProfile, make_preset
from .inversion import (InversionConfig, InversionError, InversionState, recursive_newton, write_profile_csv,
                        write_run_log)
from .synth import (FAR, NEAR, MeasurementGrid, NoiseSpec, far_grid, frequencies, make_dataset, read_dataset,
                    write_dataset)
from .waves import IncidentConfig

logger = logging.getLogger(__name__)

MODES = ("forward", "synth", "invert-far", "invert-near", "verify")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

DEFAULTS = {
    "scenario": {"preset": ""},
    "profile": {"name": "example1", "R": "1.0", "vertices": ""},
    "incident": {"angles": "-pi/6"},
    "frequencies": {"N": "10", "k": ""},
    "measurement": {"kind": "far", "n_f": "200", "H": "1.0", "L": "1.0", "m": "200"},
    "noise": {"delta": "0.05", "seed": "0", "distribution": "normal"},
    "mesh": {"grading": "8", "data_scale": "1.5", "eta": ""},
    "inversion": {"M": "10", "rho": "0.8", "tau": "1.5", "delta": "", "max_inner": "25",
                  "max_increases": "3", "mesh_scale": "1.0", "initial_value": "0.1",
                  "initial_window": "2, 4", "a0": ""},
    "data": {"directory": ""},
    "verify": {"k": "5", "shift": "0.3", "R": "1.0", "tolerance": "1e-6", "breaking_margin": "1e-3",
               "mesh_scale": "6"},
}

# Angle sets: ';' separates incident configurations, ',' separates the
# superposed waves of one configuration.
_TWO_WAVE = "-pi/6, pi/6"
SCENARIO_PRESETS = {
    "example1-shape-only": {
        "profile": {"name": "example1"}, "incident": {"angles": "-pi/6"},
        "frequencies": {"N": "10"}, "measurement": {"kind": "far"},
        "inversion": {"M": "10", "initial_value": "0.1", "initial_window": "2, 4"}},
    "example2-two-wave": {
        "profile": {"name": "example1"}, "incident": {"angles": _TWO_WAVE},
        "frequencies": {"N": "13"}, "measurement": {"kind": "far"},
        "inversion": {"M": "10", "initial_value": "0.1", "initial_window": "2, 4"}},
    "example3-piecewise": {
        "profile": {"name": "example3-piecewise"}, "incident": {"angles": _TWO_WAVE},
        "frequencies": {"N": "18"}, "measurement": {"kind": "far"},
        "inversion": {"M": "40", "initial_value": "0.05", "initial_window": "5, 15"}},
    "example4-multiscale": {
        "profile": {"name": "example4-multiscale"}, "incident": {"angles": _TWO_WAVE},
        "frequencies": {"N": "30"}, "measurement": {"kind": "far"},
        "inversion": {"M": "40", "initial_value": "0.05", "initial_window": "10, 30"}},
    "example4-multiscale-two-pairs": {
        "profile": {"name": "example4-multiscale"}, "incident": {"angles": "-pi/6, 0; pi/6, 0"},
        "frequencies": {"N": "30"}, "measurement": {"kind": "far"},
        "inversion": {"M": "40", "initial_value": "0.05", "initial_window": "10, 30"}},
    "example5-multiscale": {
        "profile": {"name": "example5-multiscale"}, "incident": {"angles": _TWO_WAVE},
        "frequencies": {"N": "35"}, "measurement": {"kind": "far"},
        "inversion": {"M": "40", "initial_value": "0.05", "initial_window": "25, 35"}},
    "example6-piecewise-near": {
        "profile": {"name": "example3-piecewise"}, "incident": {"angles": "-pi/6"},
        "frequencies": {"N": "18"}, "measurement": {"kind": "near"}, "inversion": {"M": "40"}},
    "example6-piecewise-near-two-waves": {
        "profile": {"name": "example3-piecewise"}, "incident": {"angles": "-pi/6; pi/6"},
        "frequencies": {"N": "18"}, "measurement": {"kind": "near"}, "inversion": {"M": "40"}},
    "example7-multiscale-near": {
        "profile": {"name": "example5-multiscale"}, "incident": {"angles": "0"},
        "frequencies": {"N": "30"}, "measurement": {"kind": "near"}, "inversion": {"M": "40"}},
    "example7-multiscale-near-two-waves": {
        "profile": {"name": "example5-multiscale"}, "incident": {"angles": "-pi/6; pi/6"},
        "frequencies": {"N": "30"}, "measurement": {"kind": "near"}, "inversion": {"M": "40"}},
    "desk-far": {
        "profile": {"name": "example1"}, "incident": {"angles": _TWO_WAVE},
        "frequencies": {"N": "4"}, "measurement": {"kind": "far"}, "noise": {"delta": "0.01"},
        "inversion": {"M": "10", "initial_value": "0.1", "initial_window": "2, 4"}},
    "desk-near": {
        "profile": {"name": "example1"}, "incident": {"angles": "-pi/6"},
        "frequencies": {"N": "4"}, "measurement": {"kind": "near"}, "noise": {"delta": "0.01"},
        "inversion": {"M": "10"}},
}


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or simple arithmetic in ``pi`` (e.g. ``-pi/6``)."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")
    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse number {text!r}: {exc}") from None


def parse_list(text: str) -> list[float]:
    return [parse_number(t) for t in text.split(",") if t.strip()]


def parse_angle_sets(text: str) -> list[tuple[float, ...]]:
    sets = [tuple(parse_list(chunk)) for chunk in text.split(";") if chunk.strip()]
    if not sets:
        raise ValueError("no incidence angles given")
    return sets


def parse_vertices(text: str) -> list[tuple[float, float]]:
    verts = []
    for chunk in text.split(";"):
        if chunk.strip():
            vals = parse_list(chunk)
            if len(vals) != 2:
                raise ValueError(f"vertex {chunk.strip()!r} needs two coordinates")
            verts.append((vals[0], vals[1]))
    return verts


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    """Fully resolved run parameters."""

    mode: str
    config: configparser.ConfigParser
    out: Path

    def get(self, section: str, key: str) -> str:
        return self.config.get(section, key)

    def _typed(self, section, key, conv):
        raw = self.get(section, key)
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigurationError(f"[{section}] {key} = {raw!r}: {exc}") from None

    def number(self, section, key) -> float:
        return self._typed(section, key, parse_number)

    def integer(self, section, key) -> int:
        val = self.number(section, key)
        if val != int(val):
            raise ConfigurationError(f"[{section}] {key} must be an integer")
        return int(val)

    def optional_number(self, section, key) -> float | None:
        return None if not self.get(section, key).strip() else self.number(section, key)

    @property
    def R(self) -> float:
        return self.number("profile", "R")

    def profile(self) -> SurfaceProfile:
        name = self.get("profile", "name").strip()
        verts = self._typed("profile", "vertices", parse_vertices) or None
        if name not in PROFILE_PRESETS:
            raise ConfigurationError(f"[profile] name = {name!r}: unknown preset; known: {', '.join(PROFILE_PRESETS)}")
        return make_preset(name, verts)

    def angle_sets(self) -> list[tuple[float, ...]]:
        sets = self._typed("incident", "angles", parse_angle_sets)
        for s in sets:
            try:
                IncidentConfig(1.0, s)
            except ValueError as exc:
                raise ConfigurationError(f"[incident] angles: {exc}") from None
        return sets

    def wavenumbers(self) -> np.ndarray:
        explicit = self._typed("frequencies", "k", parse_list)
        if explicit:
            ks = np.array(explicit)
            if np.any(ks <= 0) or np.any(np.diff(ks) <= 0):
                raise ConfigurationError("[frequencies] k must be positive and increasing")
            return ks
        return frequencies(self.integer("frequencies", "N"))

    def kind(self) -> str:
        """Measurement kind; the inversion modes fix it regardless of the file."""
        kind = self.get("measurement", "kind").strip()
        if kind not in (FAR, NEAR):
            raise ConfigurationError(f"[measurement] kind = {kind!r}: expected far or near")
        if self.mode == "invert-far":
            return FAR
        if self.mode == "invert-near":
            return NEAR
        return kind

    def grid(self) -> MeasurementGrid:
        return MeasurementGrid(self.kind(), n_f=self.integer("measurement", "n_f"),
                               H=self.number("measurement", "H"), L=self.number("measurement", "L"),
                               m=self.integer("measurement", "m"))

    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.number("noise", "delta"), self.integer("noise", "seed"),
                         self.get("noise", "distribution").strip())

    def inversion(self) -> InversionConfig:
        delta = self.optional_number("inversion", "delta")
        window = self._typed("inversion", "initial_window", parse_list)
        if len(window) != 2:
            raise ConfigurationError("[inversion] initial_window needs two indices")
        a0 = self._typed("inversion", "a0", parse_list) or None
        return InversionConfig(
            M=self.integer("inversion", "M"), R=self.R, rho=self.number("inversion", "rho"),
            tau=self.number("inversion", "tau"),
            delta=self.number("noise", "delta") if delta is None else delta,
            max_inner=self.integer("inversion", "max_inner"),
            max_increases=self.integer("inversion", "max_increases"),
            grading=self.integer("mesh", "grading"), mesh_scale=self.number("inversion", "mesh_scale"),
            eta=self.optional_number("mesh", "eta"), a0=tuple(a0) if a0 else None,
            initial_value=self.number("inversion", "initial_value"),
            initial_window=(int(window[0]), int(window[1])))

    def validate(self) -> None:
        """Touch every field used by the mode so errors surface before any work."""
        self.profile()
        self.angle_sets()
        if self.mode == "verify":
            for key in ("k", "shift", "R", "tolerance", "breaking_margin", "mesh_scale"):
                self.number("verify", key)
            return
        self.wavenumbers()
        self.grid()
        self.noise()
        self.integer("mesh", "grading")
        self.number("mesh", "data_scale")
        if self.mode.startswith("invert"):
            self.inversion()


def load_scenario(mode: str, path, out=None, seed: int | None = None) -> Scenario:
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    path = Path(path)
    user = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    user.optionxform = str
    try:
        with path.open() as fh:
            user.read_file(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config file {path}: {exc}") from None

    cfg = configparser.ConfigParser(interpolation=None)
    cfg.optionxform = str
    cfg.read_dict(DEFAULTS)
    preset = user.get("scenario", "preset", fallback="").strip()
    if preset:
        if preset not in SCENARIO_PRESETS:
            raise ConfigurationError(f"[scenario] preset = {preset!r}: unknown; known: {', '.join(SCENARIO_PRESETS)}")
        cfg.read_dict(SCENARIO_PRESETS[preset])
    for section in user.sections():
        if section == "manifest":
            continue
        if section not in DEFAULTS:
            raise ConfigurationError(f"unknown section [{section}]")
        for key, val in user.items(section):
            if key not in DEFAULTS[section]:
                raise ConfigurationError(f"[{section}] {key}: unknown key")
            cfg.set(section, key, val)
    if seed is not None:
        cfg.set("noise", "seed", str(seed))
    if out is None:
        out = path.parent / f"{path.stem}-{mode}"
    scen = Scenario(mode=mode, config=cfg, out=Path(out))
    scen.validate()
    return scen


def write_manifest(scen: Scenario, outputs: list[Path], status: str) -> Path:
    cfg = configparser.ConfigParser(interpolation=None)
    cfg.optionxform = str
    cfg.read_dict(scen.config)
    cfg["manifest"] = {
        "mode": scen.mode, "status": status, "version": __version__,
        "python": platform.python_version(), "numpy": np.__version__,
        "outputs": ", ".join(sorted(str(p.relative_to(scen.out)) for p in outputs)),
    }
    path = scen.out / "manifest.ini"
    with path.open("w") as fh:
        fh.write("# resolved scenario; pass this file back with --config to repeat the run\n")
        cfg.write(fh)
    return path


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------

def _run_forward(scen: Scenario) -> list[Path]:
    prof = scen.profile()
    grid = scen.grid()
    eta = scen.optional_number("mesh", "eta")
    grading = scen.integer("mesh", "grading")
    outputs = []
    angles = far_grid(grid.n_f)
    pts = near_grid(grid.H, grid.L, grid.m)
    for k in scen.wavenumbers():
        for l, a in enumerate(scen.angle_sets()):
            cfg = IncidentConfig(float(k), a)
            sol = solve_forward(prof, cfg, scen.R, eta=eta, grading=grading)
            far = eval_far_field(sol, angles)
            near = eval_near_field(sol, cfg, grid.H, grid.L, grid.m)
            for tag, coord, vals in (("far", angles, far), ("near", pts[:, 0], near)):
                path = scen.out / f"forward_{tag}_k{k:g}_d{l + 1}.dat"
                head = [f"# kind = {tag}", f"# k = {k:g}", f"# theta = {list(a)}",
                        f"# profile = {prof.describe()}", f"# eta = {sol.eta!r}", f"# mesh_n = {sol.mesh.n}"]
                if tag == "near":
                    head.append(f"# H = {grid.H!r}")
                head.append(f"# columns = index, {'angle' if tag == 'far' else 'x1'}, re, im, intensity")
                rows = [f"{j}, {c:.16e}, {v.real:.16e}, {v.imag:.16e}, {abs(v) ** 2:.16e}"
                        for j, (c, v) in enumerate(zip(coord, vals))]
                path.write_text("\n".join(head + rows) + "\n")
                outputs.append(path)
    return outputs


def _make_data(scen: Scenario):
    return make_dataset(scen.profile(), scen.angle_sets(), scen.wavenumbers(), scen.grid(), scen.noise(),
                        R=scen.R, eta=scen.optional_number("mesh", "eta"),
                        grading=scen.integer("mesh", "grading"), mesh_scale=scen.number("mesh", "data_scale"))


def _run_synth(scen: Scenario) -> list[Path]:
    return write_dataset(scen.out / "data", _make_data(scen))


def _run_invert(scen: Scenario) -> list[Path]:
    outputs = []
    data_dir = scen.get("data", "directory").strip()
    if data_dir:
        sets = read_dataset(data_dir)
        kind = scen.kind()
        if any(ms.kind != kind for ms in sets):
            raise ConfigurationError(f"[data] directory holds data not matching mode {scen.mode}")
        truth = None
    else:
        sets = _make_data(scen)
        outputs += write_dataset(scen.out / "data", sets)
        truth = scen.profile()
    icfg = scen.inversion()
    a0 = icfg.initial_guess(scen.kind())

    def checkpoint(state: InversionState):
        st = state.stages[-1]
        path = scen.out / f"profile_k{st.k:g}.csv"
        write_profile_csv(path, st.coeffs, icfg.R, truth=truth, initial=a0,
                          header={"k": f"{st.k:g}", "status": st.status, "err": f"{st.err:.6e}"})
        outputs.append(path)

    state = recursive_newton(sets, icfg, on_stage=checkpoint)
    outputs.append(write_run_log(scen.out / "run_log.csv", state.history))
    outputs.append(write_profile_csv(scen.out / "profile.csv", state.a, icfg.R, truth=truth, initial=a0,
                                     header={"status": ",".join(s.status for s in state.stages)}))
    outputs += emit_plots(scen.out)
    return outputs


def _fitted_radius(profile: SurfaceProfile, R_min: float, margin: float = 0.3) -> float:
    return max(R_min, profile.support_radius + margin)


def verification_suite(profile: SurfaceProfile, k: float = 5.0, shift: float = 0.3, R: float = 1.0,
                       tol: float = 1e-6, margin: float = 1e-3, n_f: int = 200,
                       mesh_scale: float = 6.0) -> list[tuple[str, bool, float]]:
    """Translation-invariance, lattice-invariance and superposition checks.

    Each profile (original or shifted) is solved in the smallest disc of
    radius at least ``R`` that contains its support with a margin, at
    ``mesh_scale`` times the default resolution. Returns
    ``(name, passed, measured value)`` triples.
    """
    t = far_grid(n_f)
    theta = (-math.pi / 6, math.pi / 6)
    results = []

    def far(prof, angles):
        rad = _fitted_radius(prof, R)
        n = nodes_per_arc(k, rad, prof, scale=mesh_scale)
        return eval_far_field(solve_forward(prof, IncidentConfig(k, angles), rad, n), t)

    def rel(a, b):
        return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))

    u = far(profile, theta[:1])
    u_shift = far(profile.shifted(shift), theta[:1])
    pred = np.exp(1j * k * shift * (math.sin(theta[0]) - np.cos(t))) * u
    results.append(("single-wave shift relation", rel(u_shift, pred) <= tol, rel(u_shift, pred)))
    dev = rel(np.abs(u_shift) ** 2, np.abs(u) ** 2)
    results.append(("single-wave phaseless invariance", dev <= tol, dev))

    ell = 2.0 * math.pi / (k * (math.sin(theta[0]) - math.sin(theta[1])))
    u2 = far(profile, theta)
    dev = rel(np.abs(far(profile.shifted(ell), theta)) ** 2, np.abs(u2) ** 2)
    results.append(("two-wave lattice invariance", dev <= tol, dev))
    dev = rel(np.abs(far(profile.shifted(ell / 2), theta)) ** 2, np.abs(u2) ** 2)
    results.append(("two-wave invariance breaking", dev > margin, dev))

    lin = rel(u2, far(profile, theta[:1]) + far(profile, theta[1:]))
    results.append(("superposition linearity", lin <= 1e-10, lin))
    return results


def _run_verify(scen: Scenario) -> tuple[list[Path], bool]:
    res = verification_suite(scen.profile(), k=scen.number("verify", "k"), shift=scen.number("verify", "shift"),
                             R=scen.number("verify", "R"), tol=scen.number("verify", "tolerance"),
                             margin=scen.number("verify", "breaking_margin"),
                             mesh_scale=scen.number("verify", "mesh_scale"))
    lines = [f"{'PASS' if ok else 'FAIL'}  {name}  ({val:.3e})" for name, ok, val in res]
    for line in lines:
        print(line)
    path = scen.out / "verify.txt"
    path.write_text("\n".join(lines) + "\n")
    return [path], all(ok for _, ok, _ in res)


def emit_plots(run_dir) -> list[Path]:
    """Write one gnuplot script per profile checkpoint in ``run_dir``.

    Scripts refer to their data by bare file name, so the run directory can be
    moved as a whole.
    """
    run_dir = Path(run_dir)
    profiles = sorted(run_dir.glob("profile_k*.csv"), key=lambda p: float(p.stem[len("profile_k"):]))
    if not profiles:
        raise FileNotFoundError(f"no profile checkpoints in {run_dir}")
    scripts = []
    for prof in profiles:
        header = prof.read_text().splitlines()
        cols = next(line for line in header if not line.startswith("#")).split(",")
        k = prof.stem[len("profile_k"):]
        curves = []
        for idx, (name, title) in enumerate((("h_true", "true profile"), ("h_init", "initial guess"),
                                             ("h_rec", f"reconstruction, k = {k}"))):
            if name in cols:
                curves.append(f"'{prof.name}' using 1:{cols.index(name) + 1} with lines "
                              f"lw 2 dt {idx + 1} title '{title}'")
        script = run_dir / f"plot_k{k}.gp"
        script.write_text("\n".join([
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set terminal pngcairo size 800,500",
            f"set output 'profile_k{k}.png'",
            "set xlabel 'x1'",
            "set ylabel 'x2'",
            "plot " + ", \\\n     ".join(curves),
        ]) + "\n")
        scripts.append(script)
    return scripts


def run_scenario(scen: Scenario) -> int:
    scen.out.mkdir(parents=True, exist_ok=True)
    status, code, outputs = "ok", EXIT_OK, []
    try:
        if scen.mode == "forward":
            outputs = _run_forward(scen)
        elif scen.mode == "synth":
            outputs = _run_synth(scen)
        elif scen.mode in ("invert-far", "invert-near"):
            outputs = _run_invert(scen)
        else:
            outputs, ok = _run_verify(scen)
            if not ok:
                status, code = "verification failed", EXIT_NUMERICAL
    except InversionError as exc:
        logger.error("%s", exc)
        snap = scen.out / "failure_state.csv"
        write_profile_csv(snap, exc.state.a, scen.R, header={"error": str(exc)})
        write_run_log(scen.out / "run_log.csv", exc.state.history)
        outputs += [snap, scen.out / "run_log.csv"]
        status, code = f"numerical failure: {exc}", EXIT_NUMERICAL
    except (SolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        logger.error("numerical failure: %s", exc)
        status, code = f"numerical failure: {exc}", EXIT_NUMERICAL
    write_manifest(scen, outputs, status)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rough-imager",
                                description="Scattering by and phaseless imaging of locally rough surfaces.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="scenario file (INI format)")
    p.add_argument("--out", help="output directory (default: next to the config file)")
    p.add_argument("--seed", type=int, help="override [noise] seed")
    p.add_argument("--threads", type=int, help="limit BLAS/LAPACK threads")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scen = load_scenario(args.mode, args.config, args.out, args.seed)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None:
        if args.threads < 1:
            print("config error: --threads must be positive", file=sys.stderr)
            return EXIT_CONFIG
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=args.threads):
            return _guarded(scen)
    return _guarded(scen)


def _guarded(scen: Scenario) -> int:
    try:
        return run_scenario(scen)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
