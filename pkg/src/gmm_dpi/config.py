"""Sweep configuration files (JSON).

Keys
----
d : int                 ambient dimension
k : int or [int]        processed dimension(s), each 1 <= k < d
sigma : float > 0       noise level (default 1)
snr_list : [float > 0]
gamma_list : [float in (0, 1]]
n_train_grid : [int]    default: 12 log-spaced points from 100 to 50000
trials : int >= 1
seed : int in [0, 2^64)
a_source : "true_direction" | "learned"
m_unlabeled : int >= 2  required when a_source is "learned"
unlabeled_draw : "moment" | "samples"   how learned A sees its data (default "moment")
test_mode : "exact" | "monte_carlo"     (default "exact")
n_test : int            test points per trial in monte_carlo mode (default 100000)
description : str       free text

Unknown keys are rejected.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from .gmm import TrainConfig
from .simulation import GridPoint, canonical_order


def default_n_train_grid() -> list[int]:
    return [int(v) for v in np.unique(np.round(np.geomspace(100, 50_000, 12)).astype(int))]


_pos_int = {"type": "integer", "minimum": 1}
SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["d", "k", "snr_list", "gamma_list", "trials", "seed"],
    "properties": {
        "d": {"type": "integer", "minimum": 2},
        "k": {"oneOf": [_pos_int, {"type": "array", "items": _pos_int, "minItems": 1}]},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "snr_list": {"type": "array", "minItems": 1,
                     "items": {"type": "number", "exclusiveMinimum": 0}},
        "gamma_list": {"type": "array", "minItems": 1,
                       "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
        "n_train_grid": {"type": "array", "minItems": 1, "items": _pos_int},
        "trials": _pos_int,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "a_source": {"enum": ["true_direction", "learned"]},
        "m_unlabeled": {"type": "integer", "minimum": 2},
        "unlabeled_draw": {"enum": ["moment", "samples"]},
        "test_mode": {"enum": ["exact", "monte_carlo"]},
        "n_test": _pos_int,
        "description": {"type": "string"},
    },
}


class ConfigError(ValueError):
    def __init__(self, problems, source=None):
        self.problems = list(problems)
        where = f"{source}: " if source else ""
        super().__init__(where + "invalid sweep config:\n  - " + "\n  - ".join(self.problems))


@dataclass(frozen=True)
class SweepConfig:
    d: int
    k: tuple
    snr_list: tuple
    gamma_list: tuple
    trials: int
    seed: int
    sigma: float = 1.0
    n_train_grid: tuple = field(default_factory=lambda: tuple(default_n_train_grid()))
    a_source: str = "true_direction"
    m_unlabeled: int | None = None
    unlabeled_draw: str = "moment"
    test_mode: str = "exact"
    n_test: int = 100_000
    description: str = ""

    def grid(self) -> list[GridPoint]:
        return canonical_order(
            GridPoint(s, g, n, k)
            for s in self.snr_list for g in self.gamma_list
            for n in self.n_train_grid for k in self.k
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("k", "snr_list", "gamma_list", "n_train_grid"):
            out[key] = list(out[key])
        if out["m_unlabeled"] is None:
            del out["m_unlabeled"]
        return out


def parse_config(raw, source=None) -> SweepConfig:
    """Validate a decoded JSON object; every problem is reported at once."""
    problems = [
        f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}"
        for e in sorted(Draft202012Validator(SCHEMA).iter_errors(raw), key=lambda e: e.path)
    ]
    if problems:
        raise ConfigError(problems, source)
    data = dict(raw)
    ks = data["k"] if isinstance(data["k"], list) else [data["k"]]
    data["k"] = tuple(ks)
    for key in ("snr_list", "gamma_list", "n_train_grid"):
        if key in data:
            data[key] = tuple(data[key])
    cfg = SweepConfig(**data)
    for k in cfg.k:
        if not k < cfg.d:
            problems.append(f"k: {k} must be smaller than d={cfg.d}")
    if cfg.a_source == "learned" and cfg.m_unlabeled is None:
        problems.append("m_unlabeled: required when a_source is 'learned'")
    for g in cfg.gamma_list:
        for n in cfg.n_train_grid:
            tc = TrainConfig(n, g)
            if tc.n2 < 1:
                problems.append(f"n_train_grid: n_train={n} with gamma={g} leaves class 2 empty")
    if problems:
        raise ConfigError(problems, source)
    return cfg


def load_config(path) -> SweepConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read file: {exc}"], path) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"], path) from exc
    return parse_config(raw, path)
