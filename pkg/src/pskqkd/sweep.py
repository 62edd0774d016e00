"""Parameter sweeps, figure presets and tabular output."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Iterable

import numpy as np

from .channel import CONDITIONING_MODES, EXACT, ChannelParams, db_to_tau, epsilon_to_nbar, tau_to_db
from .constellation import INFINITE, build_constellation, parse_alphabet_size, source_entropy
from .fock import FockCutoff
from .rates import (
    DEFAULT_ANGULAR,
    DEFAULT_RADIAL,
    gaussian_rr_terms,
    make_grid,
    rate_dr,
    rate_rr,
    upper_bound_terms,
)

RATE_COLUMNS = ("attenuation_db", "tau", "nbar", "epsilon", "N", "z", "direction",
                "i_ab_bits", "holevo_bits", "rate_bits", "cutoff_dim", "converged")
ENTROPY_COLUMNS = ("z", "N", "entropy_bits")
DIRECTIONS = ("dr", "rr", "dr-upper", "gaussian")
FORMATS = ("csv", "json")

FIG2_SIZES = (1, 2, 3, 4, 5, 6, 8, INFINITE)
FIG34_RADII = (0.1, 0.3, 0.6, 1.0, 2.0, 1e6)
PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _as_list(value) -> list | None:
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


@dataclass
class SweepConfig:
    n: list = field(default_factory=lambda: [4])
    z: list = field(default_factory=lambda: [0.1])
    db: list | None = None
    tau: list | None = None
    nbar: list | None = None
    epsilon: list | None = None
    epsilon_convention: str = "input"
    direction: str = "rr"
    vm: float | None = None
    beta: float = 1.0
    cutoff: int | None = None
    grid_radial: int = DEFAULT_RADIAL
    grid_angular: int = DEFAULT_ANGULAR
    mode: str = EXACT
    check_convergence: bool = True
    out: str | None = None
    format: str = "csv"
    workers: int = 1

    @classmethod
    def from_mapping(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        flat = {}
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(key, "unknown configuration field")
            flat[key] = value
        return cls(**flat).validated()

    def validated(self) -> "SweepConfig":
        cfg = replace(self)
        try:
            cfg.n = [parse_alphabet_size(v) for v in _as_list(cfg.n)]
        except (TypeError, ValueError) as exc:
            raise ConfigError("n", str(exc)) from None
        for name in ("z", "db", "tau", "nbar", "epsilon"):
            values = _as_list(getattr(cfg, name))
            if values is not None:
                try:
                    values = [float(v) for v in values]
                except (TypeError, ValueError):
                    raise ConfigError(name, "values must be numbers") from None
                if not values:
                    raise ConfigError(name, "list must be nonempty")
            setattr(cfg, name, values)
        if not cfg.z:
            raise ConfigError("z", "list must be nonempty")
        if any(v < 0 for v in cfg.z):
            raise ConfigError("z", "radius must be >= 0")
        if any(n is not INFINITE and n < 1 for n in cfg.n):
            raise ConfigError("n", "alphabet size must be >= 1")
        if (cfg.db is None) == (cfg.tau is None):
            raise ConfigError("db/tau", "provide exactly one of db or tau")
        if cfg.db is not None and any(v < 0 for v in cfg.db):
            raise ConfigError("db", "attenuation must be >= 0")
        if cfg.tau is not None and any(not 0 < v <= 1 for v in cfg.tau):
            raise ConfigError("tau", "transmissivity must lie in (0, 1]")
        if cfg.nbar is not None and cfg.epsilon is not None:
            raise ConfigError("nbar/epsilon", "provide at most one of nbar or epsilon")
        if cfg.nbar is None and cfg.epsilon is None:
            cfg.nbar = [0.0]
        for name in ("nbar", "epsilon"):
            values = getattr(cfg, name)
            if values is not None and any(v < 0 for v in values):
                raise ConfigError(name, "must be >= 0")
        if cfg.epsilon_convention not in ("input", "output"):
            raise ConfigError("epsilon_convention", "must be 'input' or 'output'")
        if cfg.direction not in DIRECTIONS:
            raise ConfigError("direction", f"must be one of {DIRECTIONS}")
        if cfg.mode not in CONDITIONING_MODES:
            raise ConfigError("mode", f"must be one of {CONDITIONING_MODES}")
        if cfg.format not in FORMATS:
            raise ConfigError("format", f"must be one of {FORMATS}")
        if cfg.vm is not None and cfg.vm < 0:
            raise ConfigError("vm", "modulation variance must be >= 0")
        if cfg.cutoff is not None and cfg.cutoff < 2:
            raise ConfigError("cutoff", "must be >= 2")
        if cfg.grid_radial < 2 or cfg.grid_angular < 1:
            raise ConfigError("grid", "node counts too small")
        if cfg.direction in ("dr", "rr") and INFINITE in cfg.n:
            raise ConfigError("n", "realistic rates need a finite alphabet")
        if cfg.direction == "dr-upper":
            noisy = (cfg.nbar and any(cfg.nbar)) or (cfg.epsilon and any(cfg.epsilon))
            if noisy:
                raise ConfigError("nbar/epsilon", "dr-upper is defined for pure loss only")
        if cfg.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        return cfg


@dataclass
class ResultTable:
    columns: tuple
    rows: list

    @property
    def all_converged(self) -> bool:
        return all(r.get("converged", True) for r in self.rows)

    def extend(self, other: "ResultTable") -> "ResultTable":
        if other.columns != self.columns:
            raise ValueError("cannot join tables with different columns")
        return ResultTable(self.columns, self.rows + other.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format_cell(row.get(col)) for col in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{col: _json_cell(row.get(col)) for col in self.columns} for row in self.rows]
        return json.dumps({"columns": list(self.columns), "rows": rows}, indent=2) + "\n"

    def render(self, fmt: str = "csv") -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _json_cell(value):
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        return float(format(value, ".9g")) if math.isfinite(value) else str(value)
    if isinstance(value, int):
        return value
    return str(value)


# ---------------------------------------------------------------------------
# evaluation


def _points(cfg: SweepConfig) -> list[dict]:
    if cfg.db is not None:
        channel = [("db", v) for v in cfg.db]
    else:
        channel = [("tau", v) for v in cfg.tau]
    noise = [("epsilon", v) for v in cfg.epsilon] if cfg.epsilon is not None else [
        ("nbar", v) for v in cfg.nbar]
    out = []
    for n in cfg.n:
        for z in cfg.z:
            for noise_kind, noise_value in noise:
                for chan_kind, chan_value in channel:
                    tau = db_to_tau(chan_value) if chan_kind == "db" else chan_value
                    db = chan_value if chan_kind == "db" else tau_to_db(tau)
                    if noise_kind == "epsilon":
                        eps = noise_value
                        nbar = epsilon_to_nbar(eps, tau, cfg.epsilon_convention)
                    else:
                        eps, nbar = None, noise_value
                    out.append({"n": n, "z": z, "tau": tau, "db": db, "nbar": nbar, "epsilon": eps})
    return out


def evaluate_point(cfg: SweepConfig, point: dict) -> dict:
    n, z, tau, nbar = point["n"], point["z"], point["tau"], point["nbar"]
    row = {"attenuation_db": float(point["db"]), "tau": float(tau), "nbar": float(nbar),
           "epsilon": point["epsilon"], "N": str(n), "z": float(z),
           "direction": cfg.direction, "cutoff_dim": None, "converged": True}
    ch = ChannelParams(tau, nbar)
    if cfg.direction == "dr-upper":
        s_b, s_e = upper_bound_terms(z, n, tau)
        row.update(i_ab_bits=s_b, holevo_bits=s_e, rate_bits=s_b - s_e)
        return row
    if cfg.direction == "gaussian":
        vm = cfg.vm if cfg.vm is not None else 2 * z * z
        i_ab, chi = gaussian_rr_terms(vm, ch)
        row.update(N="gaussian", z=math.sqrt(vm / 2), i_ab_bits=i_ab, holevo_bits=chi,
                   rate_bits=cfg.beta * i_ab - chi)
        return row
    c = build_constellation(z, n)
    grid = make_grid(c, ch, cfg.grid_radial, cfg.grid_angular)
    cutoff = FockCutoff(cfg.cutoff) if cfg.cutoff is not None else None
    fn = rate_dr if cfg.direction == "dr" else rate_rr
    kwargs = {"mode": cfg.mode} if cfg.direction == "rr" else {}
    rp = fn(c, ch, grid=grid, cutoff=cutoff, beta=cfg.beta,
            check_convergence=cfg.check_convergence, **kwargs)
    row.update(i_ab_bits=rp.i_ab, holevo_bits=rp.holevo, rate_bits=rp.rate,
               cutoff_dim=rp.cutoff_dim, converged=rp.converged)
    return row


def _evaluate_args(args):
    return evaluate_point(*args)


def run_sweep(cfg: SweepConfig) -> ResultTable:
    cfg = cfg.validated()
    points = _points(cfg)
    jobs = [(cfg, p) for p in points]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_evaluate_args, jobs))
    else:
        rows = [evaluate_point(*job) for job in jobs]
    return ResultTable(RATE_COLUMNS, rows)


def entropy_table(sizes: Iterable, radii: Iterable[float]) -> ResultTable:
    rows = []
    for n in sizes:
        n = parse_alphabet_size(n)
        for z in radii:
            rows.append({"z": float(z), "N": str(n), "entropy_bits": source_entropy(float(z), n)})
    return ResultTable(ENTROPY_COLUMNS, rows)


# ---------------------------------------------------------------------------
# figure presets


def _grid(start: float, stop: float, step: float) -> list[float]:
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def preset_configs(name: str) -> list[SweepConfig]:
    """Sweep configurations behind a rate figure (all except fig2)."""
    tau_grid = _grid(0.02, 1.0, 0.02)
    if name == "fig3":
        return [SweepConfig(n=[4], z=list(FIG34_RADII), tau=tau_grid, direction="dr-upper")]
    if name == "fig4":
        radii = [z for z in FIG34_RADII if z <= 2]
        return [SweepConfig(n=[4, INFINITE], z=radii, tau=tau_grid, direction="dr-upper")]
    if name == "fig5":
        return [SweepConfig(n=[4], z=[0.1], db=_grid(0, 4, 0.25),
                            nbar=[0.0, 0.01, 0.1], direction="dr")]
    if name in ("fig6", "fig7"):
        z, eps, vm = (0.1, 0.001, 0.02) if name == "fig6" else (1.0, 0.01, 2.0)
        db = _grid(0, 20, 1)
        return [
            SweepConfig(n=[4], z=[z], db=db, epsilon=[0.0, eps], direction="rr"),
            SweepConfig(n=[4], z=[z], db=db, epsilon=[0.0, eps], direction="gaussian", vm=vm),
        ]
    raise ConfigError("figure", f"unknown preset {name!r}; valid: {', '.join(PRESETS)}")


def figure_preset(name: str, workers: int = 1) -> ResultTable:
    if name == "fig2":
        return entropy_table(FIG2_SIZES, np.round(np.arange(0, 5.0001, 0.05), 10))
    tables = [run_sweep(replace(cfg, workers=workers)) for cfg in preset_configs(name)]
    out = tables[0]
    for t in tables[1:]:
        out = out.extend(t)
    return out
