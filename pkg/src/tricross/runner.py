"""Experiment orchestration: config parsing, suite execution, deterministic files.

Every output file embeds its full configuration (as # comments in CSV, as a
"config" object in JSON) together with the seed and toolkit version, so any
record can be re-run and byte-compared by verify().
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, fields, replace
from fractions import Fraction

from . import __version__
from .arms import arm_probability_scan, coarse_six_arm
from .conformal import cardy_comparison
from .estimators import (
    critical_bisection,
    estimate,
    exact_probability,
    exponent_fit,
    separating_profile,
    Estimate,
)
from .events import CrossingQuery
from .geometry import (
    BOND,
    SQUARE,
    TRIANGULAR,
    LatticeGraph,
    MeshSpec,
    TriangleDomain,
    build_lattice,
    snap_to_lattice,
)
from .randomness import sample

SCHEMA_VERSION = 1

# literature estimate for the site-square threshold; a config value, not a
# model constant, refinable via the bisect experiment
SITE_SQUARE_P = 0.592746

EXPERIMENTS = ("crossing", "profile", "arms", "sixarm", "conformal",
               "oracle", "bisect")

CSV_COLUMNS = ("experiment", "mode", "variant", "l", "X_num", "X_den", "p",
               "n", "successes", "p_hat", "ci_low", "ci_high", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "crossing"
    mode: str = BOND
    variant: str = SQUARE
    l: tuple[int, ...] = (16,)
    x: tuple[Fraction, ...] = (Fraction(1, 2),)
    p: float | Fraction | None = None
    n: int = 1000
    seed: int = 0
    workers: int = 1
    out: str = ""
    format: str = "csv"
    exact: bool = False
    # arm scans
    R: int = 32
    radii: tuple[int, ...] = (2, 4, 8)
    open_arms: int = 3
    closed_arms: int = 2
    geometry: str = "whole-plane"
    # coarse six-arm
    r: int = 4
    c: float = 0.5
    # conformal grid
    grid_start: float = 0.05
    grid_stop: float = 0.95
    grid_step: float = 0.05
    # bisection
    lo: float = 0.3
    hi: float = 0.7
    tol: float = 0.02

    def resolved_p(self):
        if self.p is not None:
            return self.p
        if self.mode == BOND or self.variant == TRIANGULAR:
            return Fraction(1, 2)
        return SITE_SQUARE_P

    def out_path(self) -> str:
        return self.out or f"{self.experiment}.{self.format}"


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_number(text: str):
    if "/" in text:
        return Fraction(text)
    if any(ch in text for ch in ".eE"):
        return float(text)
    return int(text)


_FIELD_PARSERS = {
    "experiment": str, "mode": str, "variant": str, "out": str,
    "format": str, "geometry": str,
    "l": lambda s: tuple(int(v) for v in s.split(",") if v),
    "radii": lambda s: tuple(int(v) for v in s.split(",") if v),
    "x": lambda s: tuple(Fraction(v) for v in s.split(",") if v),
    "p": lambda s: None if s == "default" else _parse_number(s),
    "n": int, "seed": int, "workers": int, "R": int, "r": int,
    "open_arms": int, "closed_arms": int,
    "c": float, "grid_start": float, "grid_stop": float, "grid_step": float,
    "lo": float, "hi": float, "tol": float,
    "exact": lambda s: s.lower() == "true",
}


def parse_config_text(text: str, base: ExperimentConfig | None = None
                      ) -> ExperimentConfig:
    """key=value lines; '#' starts a comment; errors name key and line."""
    cfg = base or ExperimentConfig()
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        parser = _FIELD_PARSERS.get(key)
        if parser is None:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        try:
            updates[key] = parser(value)
        except Exception as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    cfg = replace(cfg, **updates)
    if cfg.experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {cfg.experiment!r}")
    if cfg.format not in ("csv", "json"):
        raise ValueError(f"unknown format {cfg.format!r}")
    return cfg


def load_config(path: str, base: ExperimentConfig | None = None
                ) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)


def config_echo(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    # workers is an execution detail, not provenance: files must be
    # byte-identical at any worker count
    pairs = []
    for f in fields(cfg):
        if f.name == "workers":
            continue
        value = getattr(cfg, f.name)
        pairs.append((f.name, "default" if value is None else _format_value(value)))
    return sorted(pairs)


def _snap_domain(x: Fraction, l: int) -> TriangleDomain:
    return TriangleDomain.isosceles(Fraction(snap_to_lattice(x, l), l))


def _est_cells(cfg, est: Estimate):
    return [str(est.n), str(est.successes), repr(est.p_hat),
            repr(est.ci_low), repr(est.ci_high), str(cfg.seed)]


def _rows_crossing(cfg: ExperimentConfig):
    p = cfg.resolved_p()
    header = list(CSV_COLUMNS) + ["pi_minus_X", "pi_minus_xpow"]
    rows = []
    for l in sorted(cfg.l):
        mesh = MeshSpec(l, cfg.mode, cfg.variant)
        for x in sorted(cfg.x):
            domain = _snap_domain(x, l)
            graph = build_lattice(mesh, domain)
            est = estimate(graph, CrossingQuery(domain), p, cfg.n,
                           cfg.seed, cfg.workers)
            rows.append(
                ["crossing", cfg.mode, cfg.variant, str(l),
                 str(x.numerator), str(x.denominator), _format_value(p)]
                + _est_cells(cfg, est)
                + [repr(est.p_hat - float(x)),
                   repr(est.p_hat - float(x) ** (8.0 / 9.0))]
            )
    return header, rows, None


def _rows_profile(cfg: ExperimentConfig):
    p = cfg.resolved_p()
    rows = []
    for l in sorted(cfg.l):
        mesh = MeshSpec(l, cfg.mode, cfg.variant)
        domain = TriangleDomain.isosceles()
        graph = build_lattice(mesh, domain)
        profile = separating_profile(graph, domain, p,
                                     n=None if cfg.exact else cfg.n,
                                     seed=cfg.seed, exact=cfg.exact,
                                     workers=cfg.workers)
        for k in range(l + 1):
            base = ["profile", cfg.mode, cfg.variant, str(l),
                    str(k), str(l), _format_value(p)]
            if cfg.exact:
                value = profile.values[k]
                rows.append(base + ["0", "0", _format_value(Fraction(value)),
                                    repr(float(value)), repr(float(value)),
                                    str(cfg.seed)])
            else:
                rows.append(base + _est_cells(cfg, profile.values[k]))
    return list(CSV_COLUMNS), rows, None


def _rows_arms(cfg: ExperimentConfig):
    p = cfg.resolved_p()
    mesh = MeshSpec(2, cfg.mode, cfg.variant)
    half = cfg.geometry == "half-plane"
    graph = LatticeGraph(mesh, -cfg.R, cfg.R, 0 if half else -cfg.R, cfg.R)
    pairs = [(r, cfg.R) for r in sorted(cfg.radii)]
    table = arm_probability_scan(graph, pairs, cfg.n, p, cfg.open_arms,
                                 cfg.closed_arms, cfg.geometry, cfg.seed,
                                 cfg.workers)
    rows = []
    for ratio, r, R, est in table:
        rows.append(["arms", cfg.mode, cfg.variant, str(R), str(r), str(R),
                     _format_value(p)] + _est_cells(cfg, est))
    try:
        slope, stderr = exponent_fit((ratio, est) for ratio, _, _, est in table)
        extra = {"fit_slope": repr(slope), "fit_stderr": repr(stderr)}
    except ValueError as exc:
        extra = {"fit_error": str(exc)}
    return list(CSV_COLUMNS), rows, extra


def _rows_sixarm(cfg: ExperimentConfig):
    p = cfg.resolved_p()
    mesh = MeshSpec(2, cfg.mode, cfg.variant)
    graph = LatticeGraph(mesh, -cfg.R, cfg.R, -cfg.R, cfg.R)
    hits = 0
    for t in range(cfg.n):
        config = sample(graph, float(p), cfg.seed, t)
        if coarse_six_arm(config, cfg.r, cfg.R, cfg.c):
            hits += 1
    est = Estimate.from_counts(hits, cfg.n, cfg.seed, "coarse-six-arm")
    rows = [["sixarm", cfg.mode, cfg.variant, str(cfg.R), str(cfg.r),
             str(cfg.R), _format_value(p)] + _est_cells(cfg, est)]
    return list(CSV_COLUMNS), rows, {"c": repr(cfg.c)}


def _conformal_grid(cfg: ExperimentConfig):
    values = []
    k = 0
    while True:
        x = cfg.grid_start + k * cfg.grid_step
        if x > cfg.grid_stop + 1e-12:
            break
        values.append(round(x, 12))
        k += 1
    return values


def _rows_conformal(cfg: ExperimentConfig):
    header = ["experiment", "X", "psi_printed", "psi_angle", "x_power",
              "dev_printed", "dev_angle"]
    rows = []
    for row in cardy_comparison(_conformal_grid(cfg)):
        rows.append(["conformal"] + [repr(row[k]) for k in header[1:]])
    return header, rows, None


def _rows_oracle(cfg: ExperimentConfig):
    p = cfg.resolved_p()
    if not isinstance(p, Fraction):
        p = Fraction(p).limit_denominator(10 ** 9)
    rows = []
    for l in sorted(cfg.l):
        mesh = MeshSpec(l, cfg.mode, cfg.variant)
        for x in sorted(cfg.x):
            domain = _snap_domain(x, l)
            graph = build_lattice(mesh, domain)
            value = exact_probability(graph, CrossingQuery(domain), p)
            rows.append(["oracle", cfg.mode, cfg.variant, str(l),
                         str(x.numerator), str(x.denominator),
                         _format_value(p), "0", "0", _format_value(value),
                         repr(float(value)), repr(float(value)),
                         str(cfg.seed)])
    return list(CSV_COLUMNS), rows, None


def _rows_bisect(cfg: ExperimentConfig):
    meshes = [MeshSpec(l, cfg.mode, cfg.variant) for l in sorted(cfg.l)]
    result = critical_bisection(meshes, cfg.lo, cfg.hi, cfg.tol,
                                n=cfg.n, seed=cfg.seed, workers=cfg.workers)
    est = result.estimate
    l = max(cfg.l)
    rows = [["bisect", cfg.mode, cfg.variant, str(l), "1", "2",
             repr(result.p)] + _est_cells(cfg, est)]
    return list(CSV_COLUMNS), rows, {"p_lo": repr(result.lo),
                                     "p_hi": repr(result.hi)}


_RUNNERS = {
    "crossing": _rows_crossing,
    "profile": _rows_profile,
    "arms": _rows_arms,
    "sixarm": _rows_sixarm,
    "conformal": _rows_conformal,
    "oracle": _rows_oracle,
    "bisect": _rows_bisect,
}


def render(cfg: ExperimentConfig) -> bytes:
    """Run the configured experiment and render the output file bytes."""
    header, rows, extra = _RUNNERS[cfg.experiment](cfg)
    if cfg.format == "csv":
        buf = io.StringIO()
        buf.write(f"# schema={SCHEMA_VERSION}\n")
        buf.write(f"# version={__version__}\n")
        for key, value in config_echo(cfg):
            buf.write(f"# {key}={value}\n")
        buf.write(",".join(header) + "\n")
        for row in rows:
            buf.write(",".join(row) + "\n")
        if extra:
            for key in sorted(extra):
                buf.write(f"# {key}={extra[key]}\n")
        return buf.getvalue().encode()
    payload = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "config": dict(config_echo(cfg)),
        "columns": header,
        "rows": rows,
    }
    if extra:
        payload["extra"] = extra
    return (json.dumps(payload, sort_keys=True, indent=1) + "\n").encode()


def run(cfg: ExperimentConfig) -> str:
    """Execute the experiment and write its record; returns the output path."""
    data = render(cfg)
    path = cfg.out_path()
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    return path


def _embedded_config(data: bytes) -> ExperimentConfig:
    text = data.decode()
    if text.startswith("{"):
        payload = json.loads(text)
        pairs = payload["config"]
    else:
        pairs = {}
        for line in text.splitlines():
            if not line.startswith("# "):
                continue
            key, _, value = line[2:].partition("=")
            pairs[key] = value
    lines = "\n".join(f"{k}={v}" for k, v in pairs.items()
                      if k in _FIELD_PARSERS)
    return parse_config_text(lines)


def verify(path: str) -> tuple[bool, str]:
    """Re-run the record's embedded config and byte-compare the output."""
    try:
        with open(path, "rb") as fh:
            original = fh.read()
    except OSError as exc:
        return False, f"cannot read record: {exc}"
    try:
        cfg = _embedded_config(original)
    except Exception as exc:
        return False, f"corrupt record (no usable embedded config): {exc}"
    fresh = render(cfg)
    if fresh == original:
        return True, "pass: byte-identical"
    old_lines = original.decode(errors="replace").splitlines()
    new_lines = fresh.decode(errors="replace").splitlines()
    for idx, (a, b) in enumerate(zip(old_lines, new_lines), start=1):
        if a != b:
            return False, (f"fail: first divergence at line {idx}: "
                           f"recorded {a!r} vs regenerated {b!r}")
    return False, (f"fail: length differs (recorded {len(old_lines)} lines, "
                   f"regenerated {len(new_lines)})")
