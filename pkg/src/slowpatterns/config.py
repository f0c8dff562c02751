"""Run-configuration schema (INI key-value format) and deterministic output helpers.

Sections and keys (defaults in parentheses; every key optional unless marked):

    [model]     builtin = SINEWELL | GRAY_SCOTT | DRYLAND | SAVANNA | CHAMPNEYS
                -- or --  F = <expression>, G = <expression>  (required: one form)
    [params]    <name> = <real>   (model parameters; required)
                tau = <real>      (1.0)
    [numerics]  n_half (4096), n_v (2001), x_max (auto), rho_max (12.0), n_rho (25),
                v_range = lo, hi (-1.35, 1.35), u_window = lo, hi (-2.0, 2.0)
    [analysis]  epsilons = 0.04, 0.02, 0.01
                mu_path = <param>, lo, hi   (M* root search path; required by
                                             analyze/exist/spectrum/verify)
                mu1_range = lo, hi, n (-2, 2, 41)   front-diagram sweep
                mu2_range = lo, hi, n (-2, 2, 41)   pulse-diagram sweep
                mu_N = <real> (0.0)
    [output]    dir = out
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .model import ModelInstance, ParameterVector, builtin, builtin_names

_KNOWN_SECTIONS = {"model", "params", "numerics", "analysis", "output"}
_KNOWN_KEYS = {
    "model": {"builtin", "f", "g"},
    "numerics": {"n_half", "n_v", "x_max", "rho_max", "n_rho", "v_range", "u_window"},
    "analysis": {"epsilons", "mu_path", "mu1_range", "mu2_range", "mu_n"},
    "output": {"dir"},
}


@dataclass
class RunConfig:
    source_path: Path
    config_hash: str
    model: ModelInstance
    n_half: int = 4096
    n_v: int = 2001
    x_max: float | None = None
    rho_max: float = 12.0
    n_rho: int = 25
    v_range: tuple[float, float] = (-1.35, 1.35)
    u_window: tuple[float, float] = (-2.0, 2.0)
    epsilons: tuple[float, ...] = (0.04, 0.02, 0.01)
    mu_path: tuple[str, float, float] | None = None
    mu1_range: tuple[float, float, int] = (-2.0, 2.0, 41)
    mu2_range: tuple[float, float, int] = (-2.0, 2.0, 41)
    mu_N: float = 0.0
    out_dir: Path = Path("out")

    def provenance(self) -> dict:
        return {"config_sha256": self.config_hash, "toolkit_version": __version__}


def _floats(text: str, n: int | None = None) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated reals, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated values, got {text!r}")
    return vals


def load_config(path: str | Path) -> RunConfig:
    """Parse and schema-validate a run configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_bytes()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(raw.decode("utf-8"))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    for sec in cp.sections():
        if sec not in _KNOWN_SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        if sec in _KNOWN_KEYS:
            for key in cp[sec]:
                if key not in _KNOWN_KEYS[sec]:
                    raise ConfigError(f"unknown key {key!r} in section [{sec}]")

    if "model" not in cp or "params" not in cp:
        raise ConfigError("config needs [model] and [params] sections")

    params_raw = dict(cp["params"])
    tau = float(params_raw.pop("tau", "1.0"))
    try:
        values = {k: float(v) for k, v in params_raw.items()}
    except ValueError as exc:
        raise ConfigError(f"non-numeric parameter value: {exc}") from exc
    if not values:
        raise ConfigError("at least one named parameter is required in [params]")
    pv = ParameterVector(values, tau=tau)

    msec = cp["model"]
    if "builtin" in msec:
        name = msec["builtin"].strip()
        if name not in builtin_names():
            raise ConfigError(f"unknown builtin {name!r}; choose from {builtin_names()}")
        try:
            model = builtin(name, pv)
        except Exception as exc:
            raise ConfigError(str(exc)) from exc
    elif "f" in msec and "g" in msec:
        try:
            model = ModelInstance(msec["f"], msec["g"], pv, name="custom")
        except Exception as exc:
            raise ConfigError(f"bad reaction expressions: {exc}") from exc
    else:
        raise ConfigError("[model] needs either 'builtin = NAME' or both 'F =' and 'G ='")

    cfg = RunConfig(source_path=path, config_hash=hashlib.sha256(raw).hexdigest(),
                    model=model)
    if "numerics" in cp:
        nsec = cp["numerics"]
        cfg.n_half = nsec.getint("n_half", cfg.n_half)
        cfg.n_v = nsec.getint("n_v", cfg.n_v)
        if nsec.get("x_max", "").strip():
            cfg.x_max = nsec.getfloat("x_max")
        cfg.rho_max = nsec.getfloat("rho_max", cfg.rho_max)
        cfg.n_rho = nsec.getint("n_rho", cfg.n_rho)
        if nsec.get("v_range", "").strip():
            cfg.v_range = _floats(nsec["v_range"], 2)
        if nsec.get("u_window", "").strip():
            cfg.u_window = _floats(nsec["u_window"], 2)
    if "analysis" in cp:
        asec = cp["analysis"]
        if asec.get("epsilons", "").strip():
            cfg.epsilons = _floats(asec["epsilons"])
        if asec.get("mu_path", "").strip():
            parts = [p.strip() for p in asec["mu_path"].split(",")]
            if len(parts) != 3:
                raise ConfigError("mu_path needs 'name, lo, hi'")
            name = parts[0]
            if name != "tau" and name not in pv.names:
                raise ConfigError(f"mu_path parameter {name!r} is not declared in [params]")
            cfg.mu_path = (name, float(parts[1]), float(parts[2]))
        if asec.get("mu1_range", "").strip():
            lo, hi, n = _floats(asec["mu1_range"], 3)
            cfg.mu1_range = (lo, hi, int(n))
        if asec.get("mu2_range", "").strip():
            lo, hi, n = _floats(asec["mu2_range"], 3)
            cfg.mu2_range = (lo, hi, int(n))
        cfg.mu_N = asec.getfloat("mu_n", cfg.mu_N)
    if "output" in cp and cp["output"].get("dir", "").strip():
        cfg.out_dir = Path(cp["output"]["dir"])
    return cfg


# ---------------------------------------------------------------------------
# deterministic writers


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, payload: dict, cfg: RunConfig | None = None) -> None:
    data = dict(payload)
    if cfg is not None:
        data["provenance"] = cfg.provenance()
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonify(data), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for x in row:
            if isinstance(x, (float, np.floating)):
                cells.append(repr(float(x)))
            else:
                cells.append(str(x))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
