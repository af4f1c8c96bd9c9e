"""Experiment configuration: strict JSON schema, canonical hashing, run manifests."""
from __future__ import annotations

import copy
import hashlib
import json
import os
from typing import Any

from latorbit.geometry import DirectionSet, WeightPair

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration."""


_NUM = (int, float)

# section name -> {key: allowed python types}
_SECTIONS: dict[str, dict[str, tuple]] = {
    "output": {"path": (str,), "format": (str,)},
    "sandwich": {"fault_middle_offset": _NUM},
    "alpha": {"lattices": (list,)},
    "siegel": {"functions": (list,), "mc_samples": (int,)},
    "volume": {"regions": (list,), "method": (str,), "mc_samples": (int,)},
    "dyadic": {"s": (int,), "k": (list,)},
    "rate": {"ensemble": (str,), "trials": (int,), "epsilon": _NUM, "step": _NUM, "rho": _NUM},
    "double_equi": {
        "t_grid": (list,),
        "w_grid": (list,),
        "mc_samples": (int,),
        "rho": _NUM,
        "box": (dict,),
    },
}

_TOP: dict[str, tuple] = {
    "schema_version": (int,),
    "weights": (dict,),
    "c": _NUM,
    "T_grid": (list,),
    "r": _NUM,
    "samples": (int,),
    "seed": (int,),
    "threads": (int,),
    "A": (dict,),
    "B": (dict,),
    "region_kind": (str,),
    **{k: (dict,) for k in _SECTIONS},
}

DEFAULTS: dict[str, Any] = {
    "c": 1.0,
    "T_grid": [],
    "r": 1.0,
    "samples": 1,
    "seed": 0,
    "threads": 1,
    "region_kind": "E_plain",
}


def _check_type(where: str, value, types: tuple):
    # bool is an int subclass; reject it for numeric fields
    if isinstance(value, bool) or not isinstance(value, types):
        names = "/".join(t.__name__ for t in types)
        raise ConfigError(f"{where}: expected {names}, got {type(value).__name__}")


def validate(raw: dict) -> dict:
    """Check ``raw`` against the schema and return it with defaults filled in."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(_TOP))
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    for k, v in raw.items():
        _check_type(k, v, _TOP[k])
    for sec, spec in _SECTIONS.items():
        if sec in raw:
            bad = sorted(set(raw[sec]) - set(spec))
            if bad:
                raise ConfigError(f"unknown field(s) in {sec}: {', '.join(bad)}")
            for k, v in raw[sec].items():
                _check_type(f"{sec}.{k}", v, spec[k])
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(copy.deepcopy(raw))
    if "weights" not in cfg:
        raise ConfigError("weights are required")
    w = cfg["weights"]
    if set(w) != {"a", "b"}:
        raise ConfigError("weights must have exactly the fields a and b")
    try:
        wp = WeightPair(tuple(map(float, w["a"])), tuple(map(float, w["b"])))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"weights: {exc}") from None
    for k in ("A", "B"):
        if k in cfg:
            try:
                DirectionSet.from_dict(cfg[k], wp.m if k == "A" else wp.n)
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{k}: {exc}") from None
    Tg = cfg["T_grid"]
    if any(isinstance(t, bool) or not isinstance(t, _NUM) for t in Tg):
        raise ConfigError("T_grid entries must be numbers")
    if any(b <= a for a, b in zip(Tg, Tg[1:])):
        raise ConfigError("T_grid must be strictly increasing")
    if any(t <= 0 for t in Tg):
        raise ConfigError("T_grid entries must be positive")
    if cfg["samples"] < 1:
        raise ConfigError("samples must be at least 1")
    if not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg["threads"] < 0:
        raise ConfigError("threads must be nonnegative")
    if not cfg["c"] > 0 or not cfg["r"] > 0:
        raise ConfigError("c and r must be positive")
    fmt = cfg.get("output", {}).get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")
    return cfg


def weight_pair(cfg: dict) -> WeightPair:
    w = cfg["weights"]
    return WeightPair(tuple(map(float, w["a"])), tuple(map(float, w["b"])))


def direction_sets(cfg: dict, wp: WeightPair):
    A = DirectionSet.from_dict(cfg["A"], wp.m) if "A" in cfg else None
    B = DirectionSet.from_dict(cfg["B"], wp.n) if "B" in cfg else None
    return A, B


def load(path: str) -> dict:
    """Read and validate a config file; I/O problems propagate as ``OSError``."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    return validate(raw)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


# fields that cannot change any output byte
_UNHASHED = ("threads", "output")


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical serialisation, ignoring thread count and output location."""
    body = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    return hashlib.sha256(canonical_json(body).encode("ascii")).hexdigest()


def resolve_threads(flag: int | None, cfg: dict) -> int:
    """Flag beats ``LATORBIT_THREADS`` beats the config; 0 means one per CPU."""
    n = flag
    if n is None:
        env = os.environ.get("LATORBIT_THREADS")
        if env is not None and env.strip():
            try:
                n = int(env)
            except ValueError:
                raise ConfigError("LATORBIT_THREADS must be an integer") from None
    if n is None:
        n = int(cfg.get("threads", 1))
    if n < 0:
        raise ConfigError("thread count must be nonnegative")
    return n if n > 0 else (os.cpu_count() or 1)
