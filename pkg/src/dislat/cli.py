"""Command-line experiment runner.

Subcommands
-----------
bands     complex band-structure scan -> bands.csv (+ optional eigenvector dumps)
kp        delta-comb dispersion scan -> kp_dispersion.csv
cell      single-cell evolution -> diag.csv + profiles
line      multi-cell pulse evolution -> diag.csv + profiles + final spectrum
preset    canned parameter sets behind the survey figures
validate  check a configuration without running it

Output goes under --out, else the DISLAT_OUT environment variable, else
./dislat-runs.  Every run directory gets a manifest.json with the resolved
parameters and a checksum per data file; rerunning the same configuration
reproduces the CSV bodies byte for byte.

Configs can also be given as a flat text file of ``key = value`` lines via
--config; explicit flags win over file values.
"""

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from .bloch import band_scan, build_operator, eigenpairs
from .errors import ConfigurationError, NumericsError
from .kronig_penney import dispersion_residual, solve_mu
from .lattice import LatticeSpec
from .propagation import (cell_grid, evolve_cell, evolve_line, line_grid,
                          sech_pulse, soliton_amplitude)

PACKAGE_NAME = "artifact"
try:
    from importlib.metadata import version as _pkg_version
    PACKAGE_VERSION = _pkg_version(PACKAGE_NAME)
except Exception:
    PACKAGE_VERSION = "unknown"

OUTPUT_ENV_VAR = "DISLAT_OUT"
DEFAULT_OUT = "dislat-runs"


@dataclass(frozen=True)
class ExperimentConfig:
    """One resolved run: lattice, numerics, and output routing."""

    mode: str
    label: str = ""
    v0: float = 0.0
    sigma: Optional[float] = None
    g0: Optional[float] = None
    gamma0: Optional[float] = None
    n_trunc: Optional[int] = None
    k: float = 0.5
    k_points: int = 101
    bands: int = 8
    dt: float = 1e-3
    t_final: float = 200.0
    grid: int = 1024
    box_cells: int = 128
    amp: float = 1.0
    nonlin: float = 0.0
    sample_every: Optional[int] = None
    dump_vectors: str = ""
    out: Optional[str] = None
    caption_gamma0: Optional[float] = None


def lattice_spec(config: ExperimentConfig) -> LatticeSpec:
    """Resolve the (sigma, G0 | gamma0) pair into a full LatticeSpec."""
    if config.mode == "kp":
        if config.gamma0 is None:
            raise ConfigurationError("kp runs need --gamma0")
        if config.g0 is not None:
            raise ConfigurationError("kp runs take --gamma0 only, not --g0")
        if config.v0 != 0.0:
            raise ConfigurationError("the delta-comb model has no real potential; drop --v0")
        return LatticeSpec.from_gamma0(v0=0.0, gamma0=config.gamma0,
                                       sigma=math.pi / 100, g=config.nonlin)
    if (config.g0 is None) == (config.gamma0 is None):
        raise ConfigurationError("give exactly one of --g0 / --gamma0")
    if config.sigma is None:
        raise ConfigurationError("--sigma is required")
    if config.g0 is not None:
        return LatticeSpec(v0=config.v0, g0=config.g0, sigma=config.sigma,
                           g=config.nonlin)
    return LatticeSpec.from_gamma0(v0=config.v0, gamma0=config.gamma0,
                                   sigma=config.sigma, g=config.nonlin)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def _write_manifest(run_dir: Path, config: ExperimentConfig,
                    spec: Optional[LatticeSpec], filenames) -> None:
    parameters = {f.name: getattr(config, f.name) for f in fields(config)
                  if f.name not in ("out",) and getattr(config, f.name) is not None}
    if spec is not None:
        # record both comb parameterizations, whichever was given
        parameters["g0"] = spec.g0
        parameters["gamma0"] = spec.gamma0
        parameters["sigma"] = spec.sigma
    record = {
        "mode": config.mode,
        "label": config.label,
        "parameters": parameters,
        "environment": {
            "package": PACKAGE_NAME,
            "version": PACKAGE_VERSION,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "files": {name: _sha256(run_dir / name) for name in sorted(filenames)},
    }
    with open(run_dir / "manifest.json", "w", encoding="ascii") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _k_grid(points: int) -> np.ndarray:
    if points < 2:
        raise ConfigurationError(f"k_points must be >= 2, got {points}")
    return np.linspace(-0.5, 0.5, points)


def _branch_order(count: int):
    """Free-band seed order 0, 1, -1, 2, -2, ... (ascending energy off center)."""
    order = [0]
    step = 1
    while len(order) < count:
        order.append(step)
        if len(order) < count:
            order.append(-step)
        step += 1
    return order[:count]


def run_bands(config: ExperimentConfig, run_dir: Path) -> list:
    spec = lattice_spec(config)
    ks = _k_grid(config.k_points)
    structure = band_scan(spec, ks, bands_kept=config.bands,
                          n_trunc=config.n_trunc)
    rows = []
    for i, k in enumerate(ks):
        for band in range(config.bands):
            mu = structure.mu_band(band)[i]
            rows.append((k, band, mu.real, mu.imag))
    _write_csv(run_dir / "bands.csv", ("k", "band_index", "re_mu", "im_mu"), rows)
    files = ["bands.csv"]
    for k_text in filter(None, (s.strip() for s in config.dump_vectors.split(","))):
        k = float(k_text)
        pairs = eigenpairs(build_operator(k, spec, n_trunc=config.n_trunc))
        for band in range(config.bands):
            pair = pairs[band]
            indices = np.arange(-pair.n_trunc, pair.n_trunc + 1)
            name = f"bloch_vec_{k:g}_{band}.csv"
            _write_csv(run_dir / name, ("fourier_index", "re_c", "im_c"),
                       zip(indices, pair.coefficients.real, pair.coefficients.imag))
            files.append(name)
    _write_manifest(run_dir, config, spec, files)
    return files


def run_kp(config: ExperimentConfig, run_dir: Path) -> list:
    spec = lattice_spec(config)
    gamma0 = spec.gamma0
    ks = _k_grid(config.k_points)
    rows = []
    for k in ks:
        for branch in _branch_order(config.bands):
            root = solve_mu(float(k), gamma0, branch)
            rows.append((k, branch, root.mu.real, root.mu.imag,
                         abs(dispersion_residual(root.mu, float(k), gamma0))))
    _write_csv(run_dir / "kp_dispersion.csv",
               ("k", "branch", "re_mu", "im_mu", "abs_residual"), rows)
    _write_manifest(run_dir, config, spec, ["kp_dispersion.csv"])
    return ["kp_dispersion.csv"]


def _write_trajectory(traj, run_dir: Path, emit_spectrum: bool) -> list:
    files = ["diag.csv"]
    _write_csv(run_dir / "diag.csv",
               ("t", "rescaled_norm", "mean_x", "soliton_integral"),
               zip(traj.times, traj.rescaled_norm, traj.mean_x,
                   traj.soliton_integral))
    for field in (traj.initial_field, traj.final_field):
        name = f"profile_{field.time:g}.csv"
        _write_csv(run_dir / name, ("x", "re_psi", "im_psi", "abs_psi"),
                   zip(field.grid.x, field.values.real, field.values.imag,
                       np.abs(field.values)))
        files.append(name)
    if emit_spectrum:
        field = traj.final_field
        hat = np.fft.fftshift(np.fft.fft(field.values))
        kappa = np.fft.fftshift(field.grid.wavenumbers)
        _write_csv(run_dir / "spectrum_final.csv", ("wavenumber", "amplitude"),
                   zip(kappa, np.abs(hat) * field.grid.dx))
        files.append("spectrum_final.csv")
    return files


def _stride(config: ExperimentConfig) -> int:
    if config.sample_every is not None:
        return config.sample_every
    return max(1, int(round(1.0 / config.dt)))


def run_cell(config: ExperimentConfig, run_dir: Path) -> list:
    spec = lattice_spec(config)
    initial = np.full(config.grid, config.amp, dtype=complex)
    traj = evolve_cell(config.k, initial, spec, dt=config.dt,
                       t_final=config.t_final, sample_every=_stride(config))
    files = _write_trajectory(traj, run_dir, emit_spectrum=False)
    _write_manifest(run_dir, config, spec, files)
    return files


def run_line(config: ExperimentConfig, run_dir: Path) -> list:
    spec = lattice_spec(config)
    grid = line_grid(cells=config.box_cells, points=config.grid)
    amplitude = (soliton_amplitude(config.amp, spec.g) if spec.g > 0.0
                 else config.amp)
    initial = sech_pulse(grid, config.k, config.amp, amplitude)
    traj = evolve_line(initial, spec, dt=config.dt, t_final=config.t_final,
                       sample_every=_stride(config))
    files = _write_trajectory(traj, run_dir, emit_spectrum=True)
    _write_manifest(run_dir, config, spec, files)
    return files


RUNNERS = {"bands": run_bands, "kp": run_kp, "cell": run_cell, "line": run_line}


def validate_config(config: ExperimentConfig) -> list:
    """Precondition findings for a run, without running it.  Returns text."""
    findings = []
    try:
        spec = lattice_spec(config)
    except ConfigurationError as err:
        return [str(err)]
    if config.mode == "bands":
        floor = spec.truncation_floor()
        n = config.n_trunc
        if n is not None and n < floor:
            findings.append(
                f"n_trunc {n} is below the minimum {floor} for sigma={spec.sigma:g}")
    if config.mode in ("cell", "line"):
        try:
            grid = (cell_grid(config.k, points=config.grid)
                    if config.mode == "cell"
                    else line_grid(cells=config.box_cells, points=config.grid))
        except ConfigurationError as err:
            return findings + [str(err)]
        if spec.g0 > 0.0 and grid.dx > spec.sigma / 8.0:
            findings.append(
                f"grid spacing {grid.dx:g} exceeds sigma/8 = {spec.sigma / 8.0:g}: "
                "the absorbers are under-resolved")
        steps = config.t_final / config.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            findings.append(
                f"t_final {config.t_final:g} is not a whole number of dt={config.dt:g} steps")
        if config.mode == "line":
            edge = 1.0 / math.cosh(config.amp * grid.length / 2.0)
            if edge > 1e-8:
                findings.append(
                    f"initial pulse carries {edge:.2e} of its peak at the box edge; "
                    "enlarge --box-cells")
    return findings


def _preset_configs() -> dict:
    pi = math.pi
    scan = dict(mode="bands", k_points=101, bands=8)
    cell_narrow = dict(mode="cell", sigma=pi / 100, g0=1.13, grid=2048,
                       dt=1e-3, t_final=200.0, caption_gamma0=0.01)
    cell_wide = dict(mode="cell", sigma=pi / 4, g0=0.045, grid=1024,
                     dt=1e-3, t_final=200.0, caption_gamma0=0.01)
    line_common = dict(mode="line", sigma=pi / 100, g0=1.13, nonlin=1.0,
                       grid=2 ** 16, box_cells=128, dt=1e-3, t_final=500.0,
                       caption_gamma0=0.01)
    presets = {
        # band scans of the weakly dissipative mixed lattice, real + imaginary
        "fig1": [dict(scan, v0=0.1, g0=0.22, sigma=pi / 20, caption_gamma0=0.01)],
        # even/odd imaginary components of the same scan
        "fig2": [dict(scan, v0=0.1, g0=0.22, sigma=pi / 20, caption_gamma0=0.01)],
        # narrow-comb pure dissipative lattice (its caption rate disagrees
        # with sigma*G0/(2 sqrt(pi)) by ~10x; recorded as printed)
        "fig3": [dict(scan, v0=0.0, g0=1.6, sigma=pi / 100, caption_gamma0=0.14)],
        "fig4": [dict(scan, v0=0.0, g0=1.6, sigma=pi / 100)],
        # wide-comb lattice: higher bands trade their minima
        "fig5": [dict(scan, v0=0.0, g0=1.12, sigma=pi / 10, caption_gamma0=0.1)],
        "fig6": [dict(scan, v0=0.0, g0=0.13, sigma=pi / 10, caption_gamma0=0.01)],
        # plane-wave cell runs at three Bloch indices, two comb widths
        "fig7": [dict(cfg, k=k, label=f"{tag}_k{k:g}")
                 for tag, cfg in (("narrow", cell_narrow), ("wide", cell_wide))
                 for k in (1.0, 0.5, 0.25)],
        # cell profile of the surviving k=1/2 wave
        "fig8": [dict(cell_narrow, k=0.5)],
        # pulse norms: two pulse widths x three Bloch indices x three combs
        "fig9a": [dict(line_common, sigma=s, g0=g0, amp=1.0 / pi, k=k,
                       label=f"sigma{s:g}_k{k:g}", caption_gamma0=0.01)
                  for s, g0 in ((pi / 100, 1.13), (pi / 20, 0.22), (pi / 4, 0.045))
                  for k in (1.0, 0.5, 0.25)],
        "fig9b": [dict(line_common, sigma=s, g0=g0, amp=1.0 / (10 * pi), k=k,
                       label=f"sigma{s:g}_k{k:g}", caption_gamma0=0.01)
                  for s, g0 in ((pi / 100, 1.13), (pi / 20, 0.22), (pi / 4, 0.045))
                  for k in (1.0, 0.5, 0.25)],
        # headline long-horizon soliton conversion run
        "fig10": [dict(line_common, k=0.5, amp=1.0 / (10 * pi))],
        # pulse center trajectories: surviving vs decaying carrier
        "fig11": [dict(line_common, k=k, amp=1.0 / (10 * pi), label=f"k{k:g}")
                  for k in (0.5, 1.0)],
    }
    compiled = {}
    for name, entries in presets.items():
        runs = []
        for i, entry in enumerate(entries):
            label = entry.pop("label", name if len(entries) == 1 else f"run{i}")
            runs.append(ExperimentConfig(label=label, **entry))
        compiled[name] = runs
    return compiled


PRESETS = _preset_configs()


def _output_root(config: ExperimentConfig) -> Path:
    if config.out:
        return Path(config.out)
    return Path(os.environ.get(OUTPUT_ENV_VAR, DEFAULT_OUT))


def execute(config: ExperimentConfig, subdir: Optional[str] = None) -> Path:
    run_dir = _output_root(config)
    if subdir:
        run_dir = run_dir / subdir
    run_dir = run_dir / (config.label or config.mode)
    run_dir.mkdir(parents=True, exist_ok=True)
    RUNNERS[config.mode](config, run_dir)
    return run_dir


def _read_config_file(path: str) -> dict:
    values = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{line_no}: expected 'key = value'")
        key, _, text = line.partition("=")
        values[key.strip().replace("-", "_")] = text.strip()
    return values


_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}
_INT_KEYS = {"n_trunc", "k_points", "bands", "grid", "box_cells", "sample_every"}
_TEXT_KEYS = {"mode", "label", "dump_vectors", "out"}


def _coerce(key: str, text: str):
    if key not in _FIELD_TYPES:
        raise ConfigurationError(f"unknown config key '{key}'")
    if key in _TEXT_KEYS:
        return text
    if key in _INT_KEYS:
        return int(text)
    return float(text)


def _merge_config(mode: str, args: argparse.Namespace) -> ExperimentConfig:
    values = {"mode": mode}
    if getattr(args, "config", None):
        for key, text in _read_config_file(args.config).items():
            if key == "mode":
                continue
            values[key] = _coerce(key, text)
    for key in _FIELD_TYPES:
        if key == "mode":
            continue
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    defaults = {
        "kp": {"bands": 4},
        "cell": {"t_final": 200.0},
        "line": {"grid": 2 ** 16, "t_final": 500.0, "amp": 1.0 / (10 * math.pi),
                 "nonlin": 1.0},
    }
    for key, value in defaults.get(mode, {}).items():
        values.setdefault(key, value)
    return ExperimentConfig(**values)


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value parameter file")
    parser.add_argument("--sigma", type=float, help="absorber 1/e half-width")
    parser.add_argument("--g0", type=float, help="absorber peak amplitude")
    parser.add_argument("--gamma0", type=float, help="mean dissipation rate")
    parser.add_argument("--v0", type=float, help="real lattice strength")
    parser.add_argument("--k", type=float, help="Bloch quasimomentum")
    parser.add_argument("--n-trunc", dest="n_trunc", type=int,
                        help="plane-wave cutoff for band scans")
    parser.add_argument("--k-points", dest="k_points", type=int,
                        help="scan resolution across the Brillouin zone")
    parser.add_argument("--bands", type=int, help="bands (or branches) kept")
    parser.add_argument("--dt", type=float, help="time step")
    parser.add_argument("--t-final", dest="t_final", type=float, help="horizon")
    parser.add_argument("--grid", type=int, help="spatial points (power of two)")
    parser.add_argument("--box-cells", dest="box_cells", type=int,
                        help="line-box length in lattice cells")
    parser.add_argument("--amp", type=float, help="initial amplitude / pulse width")
    parser.add_argument("--nonlin", type=float, help="cubic coefficient g")
    parser.add_argument("--sample-every", dest="sample_every", type=int,
                        help="steps between recorded samples")
    parser.add_argument("--dump-vectors", dest="dump_vectors",
                        help="comma-separated k values whose eigenvectors to write")
    parser.add_argument("--label", help="run directory name")
    parser.add_argument("--out", help="output root directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dislat",
        description="Band structures and wave dynamics of dissipative lattices.")
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in RUNNERS:
        mode_parser = sub.add_parser(mode, help=f"run one {mode} computation")
        _add_run_flags(mode_parser)
    preset = sub.add_parser("preset", help="run a canned figure dataset")
    preset.add_argument("name", choices=sorted(PRESETS))
    preset.add_argument("--out", help="output root directory")
    check = sub.add_parser("validate", help="report configuration findings")
    check.add_argument("name", nargs="?", choices=sorted(PRESETS),
                       help="preset to check instead of flags")
    check.add_argument("--mode", choices=sorted(RUNNERS), default="bands")
    _add_run_flags(check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "preset":
            for config in PRESETS[args.name]:
                if args.out:
                    config = replace(config, out=args.out)
                run_dir = execute(config, subdir=args.name)
                print(run_dir)
            return 0
        if args.command == "validate":
            if args.name:
                configs = PRESETS[args.name]
            else:
                configs = [_merge_config(args.mode, args)]
            findings = []
            for config in configs:
                findings += [f"{config.label or config.mode}: {text}"
                             for text in validate_config(config)]
            for line in findings:
                print(line)
            if not findings:
                print("no findings")
            return 0
        config = _merge_config(args.command, args)
        print(execute(config))
        return 0
    except ConfigurationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericsError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
