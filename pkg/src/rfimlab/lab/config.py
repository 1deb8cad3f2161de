"""Flat ``key = value`` experiment configuration."""
from __future__ import annotations

import dataclasses
import os
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _str(s: str) -> str:
    return s.strip()


@dataclass(frozen=True)
class ExperimentConfig:
    T: tuple = (3.0,)
    eps: tuple = (0.1,)
    N: tuple = (15,)
    q: int = 4
    q_grid: tuple = (2, 4, 8)
    k: int = 4
    c_g: float = 1.0
    sweeps: int = 10_000
    burn_in: int = 1_000
    thin: int = 1
    chains: int = 1
    replicas: int = 1
    samples: int = 1_000
    batches: int = 50
    seed: int = 0
    estimator: str = "rao-blackwell"
    workers: int = 1
    timing: bool = False
    T_c: float = 4.5115
    r: float = 16.0
    points: str = ""
    out_dir: str = "out"
    svg: bool = True


_PARSERS = {
    "T": _floats, "eps": _floats, "N": _ints, "q": int, "q_grid": _ints, "k": int,
    "c_g": float, "sweeps": int, "burn_in": int, "thin": int, "chains": int,
    "replicas": int, "samples": int, "batches": int, "seed": int, "estimator": _str,
    "workers": int, "timing": _bool, "T_c": float, "r": float, "points": _str,
    "out_dir": _str, "svg": _bool,
}

HELP = {
    "T": "temperature grid (comma separated)",
    "eps": "field-strength grid (comma separated)",
    "N": "box half-widths (comma separated)",
    "q": "coarse box scale; must divide N+1 for coarse-grained commands",
    "q_grid": "box scales for the good-box calibration",
    "k": "shell width of the boundary decomposition",
    "c_g": "good-box constant entering p_aux = 1 - exp(-c_g q / 250)",
    "sweeps": "measurement sweeps per chain",
    "burn_in": "discarded sweeps per chain",
    "thin": "sweeps between recorded samples (decay, goodbox)",
    "chains": "independent chains per boundary condition",
    "replicas": "disorder replicas per (T, eps, N)",
    "samples": "recorded configurations (decay, goodbox)",
    "batches": "number of batches for batch-means error bars",
    "seed": "master seed",
    "estimator": "raw or rao-blackwell",
    "workers": "worker processes",
    "timing": "fill the seconds column (makes CSVs run-dependent)",
    "T_c": "critical temperature reference (3D Ising literature value)",
    "r": "padding radius for the partition command",
    "points": "text file of coarse coordinates for the partition command",
    "out_dir": "output directory",
    "svg": "write SVG plots",
}

assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)} == set(HELP)


def config_help() -> str:
    defaults = ExperimentConfig()
    rows = []
    for f in fields(ExperimentConfig):
        v = getattr(defaults, f.name)
        rows.append(f"  {f.name:<10} {HELP[f.name]} (default: {format_value(v)})")
    return "\n".join(rows)


def format_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def parse_pairs(pairs, base: dict | None = None) -> dict:
    out = dict(base or {})
    for key, raw in pairs:
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(key, "unknown configuration key")
        try:
            out[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {raw!r} ({exc})") from None
    return out


def read_config_text(text: str) -> list[tuple[str, str]]:
    pairs = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"expected key = value, got {line!r}")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def load_config(path=None, overrides=(), command: str | None = None) -> ExperimentConfig:
    pairs = []
    if path is not None:
        pairs += read_config_text(Path(path).read_text())
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        k, v = item.split("=", 1)
        pairs.append((k, v))
    cfg = ExperimentConfig(**parse_pairs(pairs))
    validate(cfg, command)
    return cfg


def replace(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(cfg, **changes)


def validate(cfg: ExperimentConfig, command: str | None = None) -> None:
    """Raise :class:`ConfigError` naming the first offending key."""
    for key in ("T", "eps", "N"):
        if len(getattr(cfg, key)) == 0:
            raise ConfigError(key, "grid must be nonempty")
    if any(t <= 0 for t in cfg.T):
        raise ConfigError("T", "temperatures must be positive")
    if any(e < 0 for e in cfg.eps):
        raise ConfigError("eps", "field strengths must be >= 0")
    if any(n < 0 for n in cfg.N):
        raise ConfigError("N", "box sizes must be >= 0")
    for key in ("q", "k", "chains", "replicas", "samples", "thin", "workers"):
        if getattr(cfg, key) < 1:
            raise ConfigError(key, "must be >= 1")
    if cfg.batches < 2:
        raise ConfigError("batches", "must be >= 2")
    if cfg.burn_in < 0:
        raise ConfigError("burn_in", "must be >= 0")
    if cfg.sweeps <= cfg.burn_in:
        raise ConfigError("sweeps", "must exceed burn_in")
    if cfg.c_g <= 0:
        raise ConfigError("c_g", "must be positive")
    if cfg.estimator not in ("raw", "rao-blackwell"):
        raise ConfigError("estimator", "must be 'raw' or 'rao-blackwell'")
    if not cfg.out_dir:
        raise ConfigError("out_dir", "must be set")
    if command in ("decay", "partition"):
        for n in cfg.N:
            if (n + 1) % cfg.q:
                raise ConfigError("q", f"q={cfg.q} does not divide N+1={n + 1}")
    if command == "goodbox" and (not cfg.q_grid or min(cfg.q_grid) < 1):
        raise ConfigError("q_grid", "needs positive box scales")
    if command == "partition" and cfg.r <= 0:
        raise ConfigError("r", "must be positive")


def ensure_writable(out_dir) -> Path:
    """Create ``out_dir`` and prove it is writable, before any computation."""
    path = Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
        fd, probe = tempfile.mkstemp(dir=path)
        os.close(fd)
        os.remove(probe)
    except OSError as exc:
        raise ConfigError("out_dir", f"not writable ({exc})") from None
    return path


def config_text(cfg: ExperimentConfig) -> str:
    return "".join(f"{f.name} = {format_value(getattr(cfg, f.name))}\n"
                   for f in fields(ExperimentConfig))


def config_dict(cfg: ExperimentConfig) -> dict:
    return {f.name: (list(v) if isinstance(v := getattr(cfg, f.name), tuple) else v)
            for f in fields(ExperimentConfig)}
