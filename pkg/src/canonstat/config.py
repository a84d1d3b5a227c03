"""Experiment configuration: TOML files with nested sections.

Example::

    [process]
    kind = "m_dependent"
    window = 2

    [basis]
    kind = "trig"

    [kernel]
    entries = [{index = [1, 1], value = 1.0}, {index = [2, 2], value = 1.0}]

    [statistic]
    kind = "V"
    n = 500

    [mc]
    reps = 20000
    seed = 1

    [grid]
    spacing = "auto"
    count = 20

    [bound]
    condition = "A"
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .basis import FiniteMeasure, OrthonormalBasis, UniformMeasure, make_finite_basis, make_trig_basis
from .bounds import (
    BoundCertificate,
    certificate_A,
    certificate_B,
    certificate_dedecker,
    certificate_hoeffding,
)
from .kernels import CoefficientTensor, Kernel, kernel_from_coefficients, named_kernel
from .mc import resolvable_grid
from .mixing import (
    MixingProcess,
    dithered_markov_process,
    iid_process,
    m_dependent_process,
    markov_process,
    phi_profile,
)

_NUM = (int, float)
SCHEMA: dict[str, dict[str, tuple]] = {
    "process": {
        "kind": (str,),
        "id": (str,),
        "window": (int,),
        "map": (str,),
        "alphabet": (int,),
        "transition": (list,),
        "probabilities": (list,),
    },
    "basis": {"kind": (str,), "probabilities": (list,)},
    "kernel": {"tensor": (str,), "entries": (list,), "order": (int,), "explicit": (str,)},
    "statistic": {"kind": (str,), "n": (int,)},
    "mc": {"reps": (int,), "seed": (int,), "workers": (int,)},
    "grid": {
        "spacing": (str,),
        "min": _NUM,
        "max": _NUM,
        "count": (int,),
        "values": (list,),
        "upper": _NUM,
    },
    "bound": {
        "condition": (str,),
        "epsilon": _NUM,
        "c0": _NUM,
        "c1": _NUM,
        "a": _NUM,
        "b": _NUM,
    },
    "output": {"dir": (str,)},
}
# keys that never affect numeric results and stay out of the config hash
UNHASHED = {("mc", "workers"), ("output", "dir")}


class ConfigError(ValueError):
    """Malformed configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass
class ExperimentConfig:
    data: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        validate(data)
        return cls(copy.deepcopy(data), base_dir or Path.cwd())

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self.data.get(section, {}).get(key, default)

    def require(self, section: str, key: str) -> Any:
        value = self.get(section, key)
        if value is None:
            raise ConfigError(f"{section}.{key}", "missing required value")
        return value

    def set(self, section: str, key: str, value: Any) -> None:
        self.data.setdefault(section, {})[key] = value
        validate(self.data)

    def hashed_view(self) -> dict:
        view = {
            s: {k: v for k, v in sec.items() if (s, k) not in UNHASHED}
            for s, sec in self.data.items()
        }
        kernel = view.get("kernel", {})
        if "tensor" in kernel:
            kernel["tensor"] = json.loads(load_tensor(self).to_json())
        return {s: sec for s, sec in view.items() if sec}

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.hashed_view(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def seed(self) -> int:
        return int(self.get("mc", "seed", 0))

    @property
    def workers(self) -> int:
        return int(self.get("mc", "workers", 1))


def validate(data: dict) -> None:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a table of sections")
    for section, body in data.items():
        if section not in SCHEMA:
            raise ConfigError(section, f"unknown section; known: {sorted(SCHEMA)}")
        if not isinstance(body, dict):
            raise ConfigError(section, "expected a table")
        for key, value in body.items():
            types = SCHEMA[section].get(key)
            if types is None:
                raise ConfigError(f"{section}.{key}", f"unknown key; known: {sorted(SCHEMA[section])}")
            if isinstance(value, bool) or not isinstance(value, types):
                names = "/".join(t.__name__ for t in types)
                raise ConfigError(f"{section}.{key}", f"expected {names}, got {value!r}")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"{path}: {exc}") from None
    return ExperimentConfig.from_dict(data, path.parent)


def build_process(cfg: ExperimentConfig) -> MixingProcess:
    kind = cfg.require("process", "kind")
    pid = cfg.get("process", "id")
    try:
        if kind == "iid":
            probs = cfg.get("process", "probabilities")
            law = FiniteMeasure(tuple(probs)) if probs else UniformMeasure()
            return iid_process(law, pid)
        if kind == "m_dependent":
            return m_dependent_process(
                cfg.require("process", "window"),
                cfg.get("process", "map", "irwin_hall"),
                cfg.get("process", "alphabet", 2),
                pid,
            )
        if kind in ("markov", "dithered_markov"):
            P = cfg.require("process", "transition")
            build = markov_process if kind == "markov" else dithered_markov_process
            return build(np.asarray(P, dtype=float), pid)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError("process", str(exc)) from None
    raise ConfigError("process.kind", f"unknown process kind {kind!r}")


def build_basis(cfg: ExperimentConfig, process: Optional[MixingProcess] = None) -> OrthonormalBasis:
    kind = cfg.get("basis", "kind", "trig")
    if kind == "trig":
        return make_trig_basis()
    if kind == "finite":
        probs = cfg.get("basis", "probabilities")
        if probs is None:
            if process is None or not isinstance(process.law, FiniteMeasure):
                raise ConfigError("basis.probabilities", "needed unless the process has a finite law")
            probs = process.law.probabilities
        try:
            return make_finite_basis(probs)
        except ValueError as exc:
            raise ConfigError("basis.probabilities", str(exc)) from None
    raise ConfigError("basis.kind", f"unknown basis {kind!r}")


def load_tensor(cfg: ExperimentConfig) -> Optional[CoefficientTensor]:
    path = cfg.get("kernel", "tensor")
    entries = cfg.get("kernel", "entries")
    if path is not None and entries is not None:
        raise ConfigError("kernel", "give either 'tensor' or 'entries', not both")
    try:
        if path is not None:
            full = Path(path) if Path(path).is_absolute() else cfg.base_dir / path
            return CoefficientTensor.from_json(full.read_text())
        if entries is not None:
            data = {"entries": entries}
            if "order" in cfg.data.get("kernel", {}):
                data["order"] = cfg.get("kernel", "order")
            return CoefficientTensor.from_json(json.dumps(data))
    except OSError as exc:
        raise ConfigError("kernel.tensor", str(exc)) from None
    except (ValueError, TypeError, KeyError) as exc:
        key = "kernel.tensor" if path is not None else "kernel.entries"
        raise ConfigError(key, f"malformed tensor: {exc}") from None
    return None


def build_kernel(
    cfg: ExperimentConfig, basis: OrthonormalBasis, tensor: Optional[CoefficientTensor]
) -> Kernel:
    name = cfg.get("kernel", "explicit")
    if name is not None:
        try:
            return named_kernel(name, basis.measure)
        except ValueError as exc:
            raise ConfigError("kernel.explicit", str(exc)) from None
    if tensor is None:
        raise ConfigError("kernel", "need 'tensor', 'entries' or 'explicit'")
    try:
        return kernel_from_coefficients(tensor, basis)
    except ValueError as exc:
        raise ConfigError("kernel", str(exc)) from None


def build_certificate(
    cfg: ExperimentConfig,
    process: MixingProcess,
    basis: OrthonormalBasis,
    tensor: Optional[CoefficientTensor],
    condition: Optional[str] = None,
) -> Optional[BoundCertificate]:
    condition = condition or cfg.get("bound", "condition")
    if condition in (None, "none"):
        return None
    n = cfg.get("statistic", "n")
    try:
        if condition == "hoeffding1963":
            return certificate_hoeffding(
                cfg.require("statistic", "n"), 2 if tensor is None else tensor.order,
                cfg.get("bound", "a", 0.0), cfg.get("bound", "b", 1.0),
            )
        if tensor is None:
            raise ConfigError("kernel", f"condition {condition} needs a coefficient tensor")
        profile = phi_profile(process)
        if condition == "A":
            return certificate_A(tensor, basis.bound, profile,
                                 cfg.get("bound", "c0"), cfg.get("bound", "c1"))
        if condition == "B":
            return certificate_B(tensor, basis.bound, profile, cfg.require("bound", "epsilon"))
        if condition == "dedecker":
            if n is None:
                raise ConfigError("statistic.n", "missing required value")
            return certificate_dedecker(tensor, basis.bound, profile, n)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("bound", str(exc)) from None
    raise ConfigError("bound.condition", f"unknown condition {condition!r}")


def build_grid(cfg: ExperimentConfig, certificate: Optional[BoundCertificate] = None) -> np.ndarray:
    values = cfg.get("grid", "values")
    if values is not None:
        grid = np.asarray(values, dtype=float)
        if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) <= 0) or np.any(grid < 0):
            raise ConfigError("grid.values", "must be a nonempty increasing list of nonnegative numbers")
        return grid
    spacing = cfg.get("grid", "spacing", "geometric")
    count = cfg.get("grid", "count", 20)
    if count < 1:
        raise ConfigError("grid.count", "must be positive")
    if spacing == "auto":
        if certificate is None:
            raise ConfigError("grid.spacing", "'auto' needs a bound condition")
        reps = cfg.require("mc", "reps")
        return resolvable_grid(certificate.bound, reps, count, cfg.get("grid", "upper", 0.99))
    if spacing not in ("geometric", "linear"):
        raise ConfigError("grid.spacing", f"unknown spacing {spacing!r}")
    lo, hi = cfg.require("grid", "min"), cfg.require("grid", "max")
    if not 0 <= lo < hi:
        raise ConfigError("grid.max", "need 0 <= min < max")
    if spacing == "geometric":
        if lo <= 0:
            raise ConfigError("grid.min", "geometric spacing needs min > 0")
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)
