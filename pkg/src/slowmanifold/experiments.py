"""Experiment configuration, artifact writing and the example runs."""

from __future__ import annotations

import hashlib
import json
import math
import os
import platform
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .exceptions import ConfigError, DivergentIntegralError
from .fastslow_system import (StateZ, SystemSpec, check_conditions, integrate_stochastic_system,
                              noise_values, sample_omega)
from .slow_manifold import (ManifoldConfig, approx_manifold, backward_noise, contraction_factor,
                            lipschitz_bound, manifold_graph, solve_manifold_point,
                            solve_tracking_point, tracking_factor)
from .systems import example1, example2, linear_system

__version__ = "0.1.0"

EXAMPLES = ("1", "2", "custom")


def _default_grid():
    return [round(v, 12) for v in np.linspace(-2.0, 2.0, 21).tolist()]


@dataclass
class ExperimentConfig:
    example: str = "2"
    alpha: float = 1.5
    alpha1: float = 1.5
    alpha2: float = 1.5
    epsilon: float = 0.01
    sigma1: float = 0.1
    sigma2: float = 0.0
    b: float = 1.0
    c: float = 0.1
    J: float = 1.0
    gamma_J: float = 1.0
    n_modes: int = 8
    dt: float = 1e-4
    horizon: float | None = None
    tol: float = 1e-12
    max_iter: int = 100
    seeds: list = field(default_factory=lambda: list(range(1, 9)))
    y0_grid: list = field(default_factory=_default_grid)
    approx_epsilons: list = field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])
    approx_y0: float = 1.0
    tracking_offset: float = 0.5
    t_final: float = 1.0
    out: str = "results"

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.example = str(self.example)
        if self.example not in EXAMPLES:
            raise ConfigError(f"example must be one of {EXAMPLES}, got {self.example!r}",
                              key="example")
        for key in ("alpha1", "alpha2"):
            v = getattr(self, key)
            if not 1.0 < v < 2.0:
                raise ConfigError(f"{key} must lie in (1, 2), got {v}", key=key)
        if not 1.0 < self.alpha < 2.0:
            raise ConfigError(f"alpha must lie in (1, 2), got {self.alpha}", key="alpha")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}", key="epsilon")
        for key in ("sigma1", "sigma2", "b"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be non-negative", key=key)
        positive = ("gamma_J", "dt", "tol", "t_final")
        for key in positive:
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive", key=key)
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigError("horizon must be positive", key="horizon")
        if self.n_modes < 1:
            raise ConfigError("n_modes must be at least 1", key="n_modes")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1", key="max_iter")
        if not self.seeds:
            raise ConfigError("seeds must not be empty", key="seeds")
        if not self.y0_grid:
            raise ConfigError("y0_grid must not be empty", key="y0_grid")
        if any(not 0 < e < 1 for e in self.approx_epsilons):
            raise ConfigError("approx_epsilons must lie in (0, 1)", key="approx_epsilons")
        slow_rate = {"1": 1.0, "2": -1.0}.get(self.example, self.J)
        if self.sigma2 > 0 and slow_rate <= 0:
            raise ConfigError(
                f"sigma2 > 0 needs a decaying slow kernel, but J = {slow_rate}", key="sigma2")

    def to_dict(self) -> dict:
        return asdict(self)

    def content_dict(self) -> dict:
        """Everything that affects results; the output location is left out."""
        d = self.to_dict()
        d.pop("out")
        return d

    @classmethod
    def from_dict(cls, data: dict, prefix: str = "") -> "ExperimentConfig":
        return cls(**_coerce_all(data, prefix))

    def system(self, epsilon: float | None = None, sigma1: float | None = None,
               sigma2: float | None = None) -> SystemSpec:
        kw = dict(epsilon=self.epsilon if epsilon is None else epsilon, alpha=self.alpha,
                  n_modes=self.n_modes,
                  sigma1=self.sigma1 if sigma1 is None else sigma1,
                  sigma2=self.sigma2 if sigma2 is None else sigma2,
                  alpha1=self.alpha1, alpha2=self.alpha2, gamma_J=self.gamma_J)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if self.example == "1":
                return example1(**kw)
            if self.example == "2":
                return example2(b=self.b, **kw)
            return linear_system(c=self.c, J=self.J, **kw)

    def manifold_config(self, dt: float | None = None) -> ManifoldConfig:
        return ManifoldConfig(horizon=self.horizon, dt=self.dt if dt is None else dt,
                              max_iter=self.max_iter, tol=self.tol)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, value, prefix: str):
    path = f"{prefix}{key}"
    kind = _FIELD_TYPES[key]
    try:
        if kind == "str":
            return str(value)
        if kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == "float | None":
            return None if value in (None, "none", "null") else float(value)
        if kind == "list":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            if not isinstance(value, (list, tuple)):
                raise TypeError
            cast = int if key == "seeds" else float
            return [cast(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: cannot interpret {value!r} as {kind}", key=path) from None
    raise ConfigError(f"{path}: unsupported field type {kind}", key=path)


def _coerce_all(data: dict, prefix: str = "") -> dict:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping", key=prefix or None)
    out = {}
    for key, value in data.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{prefix}{key}: unknown configuration key", key=f"{prefix}{key}")
        out[key] = _coerce(key, value, prefix)
    return out


def parse_config(path: str | os.PathLike | None = None, overrides: dict | None = None
                 ) -> ExperimentConfig:
    """Read a YAML or JSON file, then apply non-None overrides (e.g. CLI flags)."""
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}", key="config")
        try:
            data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {p}: {exc}", key="config") from None
        data = _coerce_all(data, prefix=f"{p.name}:")
    if overrides:
        data.update(_coerce_all({k: v for k, v in overrides.items() if v is not None},
                                prefix="--"))
    return ExperimentConfig(**data)


# --- artifact writing ----------------------------------------------------------

def versions() -> dict:
    import scipy
    import sklearn

    return {"slowmanifold": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__}


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def manifest_hash(config: ExperimentConfig, command: str) -> str:
    payload = {"command": command, "config": config.content_dict(), "versions": versions()}
    return hashlib.sha256(_canonical(payload).encode()).hexdigest()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    return obj


class ArtifactWriter:
    """Writes CSV/JSON files into one directory and records their digests."""

    def __init__(self, out_dir, config: ExperimentConfig, command: str):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.command = command
        self.hash = manifest_hash(config, command)
        self.files: dict[str, str] = {}

    def _record(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text, encoding="utf-8", newline="\n")
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def csv(self, name: str, header: list[str], rows) -> Path:
        lines = [f"# manifest_hash={self.hash}", ",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        return self._record(name, "\n".join(lines) + "\n")

    def json(self, name: str, payload: dict) -> Path:
        body = {"manifest_hash": self.hash, **_json_safe(payload)}
        return self._record(name, json.dumps(body, indent=2, sort_keys=True) + "\n")

    def manifest(self, extra: dict | None = None) -> Path:
        body = {"manifest_hash": self.hash, "command": self.command,
                "config": self.config.content_dict(), "versions": versions(),
                "artifacts": dict(sorted(self.files.items()))}
        body.update(_json_safe(extra or {}))
        text = json.dumps(body, indent=2, sort_keys=True) + "\n"
        path = self.out / "manifest.json"
        path.write_text(text, encoding="utf-8", newline="\n")
        return path


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


# --- runs ----------------------------------------------------------------------

def system_summary(spec: SystemSpec) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = check_conditions(spec).as_dict()
    out = {"conditions": report, "K": spec.K, "epsilon": spec.epsilon}
    try:
        out["contraction_factor"] = contraction_factor(spec).rho
        out["lipschitz_bound"] = lipschitz_bound(spec)
        out["tracking_factor"] = tracking_factor(spec)
    except ValueError as exc:
        out["constants_error"] = str(exc)
    return out


def _omega_for(spec, cfg: ExperimentConfig, mcfg: ManifoldConfig, seed: int, t_max: float):
    return sample_omega(spec, -mcfg.horizon, t_max, mcfg.dt, seed)


def write_manifold(writer: ArtifactWriter, spec: SystemSpec, cfg: ExperimentConfig) -> list[str]:
    mcfg = cfg.manifold_config().for_spec(spec)
    names = []
    header = ([f"y0_{i + 1}" for i in range(spec.slow_dim)]
              + [f"h_coeff_{i + 1}" for i in range(spec.n_modes)]
              + ["iterations", "final_residual"])
    for seed in cfg.seeds:
        omega = _omega_for(spec, cfg, mcfg, seed, 0.0)
        noise = backward_noise(spec, omega, mcfg)
        points = manifold_graph(spec, omega, cfg.y0_grid, mcfg, noise)
        rows = [list(p.y0) + list(p.h_value) + [p.iterations, p.final_residual] for p in points]
        name = f"manifold_seed{seed}.csv"
        writer.csv(name, header, rows)
        names.append(name)
    return names


def write_tracking(writer: ArtifactWriter, spec: SystemSpec, cfg: ExperimentConfig) -> dict:
    mcfg = cfg.manifold_config().for_spec(spec)
    t_fwd = spec.epsilon / spec.gamma * math.log(1e8)
    reports = {}
    y0 = cfg.approx_y0
    for seed in cfg.seeds:
        omega = _omega_for(spec, cfg, mcfg, seed, t_fwd + mcfg.dt)
        x0 = np.zeros(spec.n_modes)
        x0[0] = cfg.tracking_offset
        rep = solve_tracking_point(spec, omega, StateZ(x0, [y0]), mcfg, t_forward=t_fwd)
        payload = rep.as_dict()
        payload.update({"seed": seed, "iterations": rep.iterations,
                        "z_checked": {"x": rep.z_checked.x, "y": rep.z_checked.y}})
        writer.json(f"tracking_seed{seed}.json", payload)
        reports[str(seed)] = rep.as_dict()
    return reports


def approx_comparison(cfg: ExperimentConfig, steps_per_epsilon: float = 1e3) -> dict:
    """H^eps against its expansion over ``cfg.approx_epsilons`` (noise-free)."""
    rows, err0, err1 = [], [], []
    for eps in cfg.approx_epsilons:
        spec = cfg.system(epsilon=eps, sigma1=0.0, sigma2=0.0)
        mcfg = ManifoldConfig(dt=eps / steps_per_epsilon, max_iter=cfg.max_iter,
                              tol=min(cfg.tol, 1e-14))
        omega = sample_omega(spec, 0.0, 1.0, mcfg.dt, 0)
        h = solve_manifold_point(spec, omega, cfg.approx_y0, mcfg).h_value
        a0 = approx_manifold(spec, omega, cfg.approx_y0, 0, mcfg)
        a1 = approx_manifold(spec, omega, cfg.approx_y0, 1, mcfg)
        e0 = float(np.linalg.norm(h - a0))
        e1 = float(np.linalg.norm(h - a1))
        err0.append(e0)
        err1.append(e1)
        rows.append([eps, cfg.approx_y0, float(np.linalg.norm(h)), e0, e1])
    eps = np.asarray(cfg.approx_epsilons)
    slope = (float(np.polyfit(np.log(eps), np.log(err1), 1)[0])
             if len(eps) > 1 and min(err1) > 0 else float("nan"))
    return {"rows": rows, "slope": slope, "err_order0": err0, "err_order1": err1}


def write_approx(writer: ArtifactWriter, cfg: ExperimentConfig) -> dict:
    res = approx_comparison(cfg)
    writer.csv("approx_order.csv",
               ["epsilon", "y0", "h_eps_norm", "err_order0", "err_order1"], res["rows"])
    writer.json("approx_order.json", {"slope": res["slope"], "epsilons": cfg.approx_epsilons})
    return {"slope": res["slope"]}


def write_simulation(writer: ArtifactWriter, spec: SystemSpec, cfg: ExperimentConfig) -> dict:
    seed = cfg.seeds[0]
    omega = sample_omega(spec, 0.0, cfg.t_final, cfg.dt, seed)
    x0 = np.zeros(spec.n_modes)
    x0[0] = cfg.tracking_offset
    traj = integrate_stochastic_system(spec, omega, StateZ(x0, [cfg.approx_y0]), 0.0,
                                       cfg.t_final, cfg.dt)
    writer.csv(f"trajectory_seed{seed}.csv", traj.header(), traj.rows())
    eta, xi = noise_values(spec, omega, 0.0)
    return {"steps": len(traj) - 1, "initial_noise": {"eta": eta, "xi": xi}}


def run_command(command: str, cfg: ExperimentConfig, out_dir=None) -> Path:
    """Run one CLI command and return the manifest path."""
    if command in ("example1", "example2"):
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "example": command[-1]})
    out = Path(out_dir or cfg.out)
    try:
        spec = cfg.system()
    except DivergentIntegralError as exc:
        raise ConfigError(str(exc), key="sigma2") from None
    writer = ArtifactWriter(out, cfg, command)
    extra = {"system": system_summary(spec)}
    full = command in ("example", "example1", "example2")
    if full or command == "manifold":
        extra["manifold_files"] = write_manifold(writer, spec, cfg)
    if full or command == "tracking":
        extra["tracking"] = write_tracking(writer, spec, cfg)
    if full or command == "approx-order":
        extra["approx"] = write_approx(writer, cfg)
    if command == "simulate":
        extra["simulation"] = write_simulation(writer, spec, cfg)
    if command == "diagnostics":
        from .diagnostics import run_diagnostics

        report = run_diagnostics(cfg)
        writer.json("diagnostics.json", report)
        extra["diagnostics"] = {"passed": report["passed"], "failed": report["failed"],
                                "skipped": report["skipped"]}
    return writer.manifest(extra)


def run_example(config: ExperimentConfig, out_dir=None) -> Path:
    return run_command("example", config, out_dir)
