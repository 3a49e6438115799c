"""Benchmark scenario files.

A scenario is an INI file with the sections ``[model]``, ``[algorithm]``,
``[stepping]`` and ``[output]``; every key is optional except ``tolerance``
when ``policy = ecco``.  Example::

    [model]
    law = nonlinear
    reticulation = 2

    [algorithm]
    correction = nepce
    alpha = 0.4

    [stepping]
    policy = ecco
    tolerance = 2.6e-5
    target_steps = 2000
"""

from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .ecco import EccoConfig
from .errors import MissingRequired, ParseError, UnknownKey
from .master import MasterPolicy
from .nepce import CorrectionMode, NepceConfig
from .quartercar import EXCITATIONS, JACOBIAN_FLOOR, QuarterCarParams

ALGORITHMS = {
    "uncorrected": CorrectionMode.OFF,
    "nepce": CorrectionMode.PLAIN,
    "nepce_mod": CorrectionMode.FEEDTHROUGH,
}

# default tuning factor per (law, reticulation)
DEFAULT_ALPHA = {("linear", 1): 0.95, ("linear", 2): 0.85, ("nonlinear", 1): 0.6, ("nonlinear", 2): 0.4}
DEFAULT_DURATION = {"linear": 4.0, "nonlinear": 2.0}
NONLINEAR_RET2_CAP = 2.5e-3


@dataclass(frozen=True)
class BenchmarkScenario:
    law: str = "linear"
    reticulation: int = 1
    algorithm: str = "uncorrected"
    alpha: float | None = None
    order: int = 0
    policy: str = "constant"
    tolerance: float | None = None
    target_steps: int | None = None
    duration: float | None = None
    dt: float = 1e-3
    dt_cap: float | None = None
    micro_steps: int = 256
    excitation: str = "tire_deflection"
    excitation_energy: float = 750.0
    jacobian_floor: float | None = JACOBIAN_FLOOR
    defect_rule: str = "trapezoid"
    residual_sampling: str = "end"
    parallel: bool = False
    params: dict = field(default_factory=dict)
    ecco: dict = field(default_factory=dict)
    label: str | None = None
    out_dir: str | None = None
    trace_file: str = "trace.csv"
    summary_file: str = "summary.csv"
    cache_dir: str | None = None

    def __post_init__(self):
        if self.law not in DEFAULT_DURATION:
            raise ParseError(f"law must be 'linear' or 'nonlinear', got {self.law!r}")
        if self.reticulation not in (1, 2):
            raise ParseError(f"reticulation must be 1 or 2, got {self.reticulation}")
        if self.algorithm not in ALGORITHMS:
            raise ParseError(f"unknown algorithm {self.algorithm!r}")
        if self.policy not in ("constant", "ecco"):
            raise ParseError(f"unknown step policy {self.policy!r}")
        if self.excitation not in EXCITATIONS:
            raise ParseError(f"unknown excitation {self.excitation!r}")
        if self.policy == "ecco" and self.tolerance is None:
            raise MissingRequired("policy = ecco requires a tolerance")

    @property
    def T(self) -> float:
        return DEFAULT_DURATION[self.law] if self.duration is None else self.duration

    @property
    def tuning(self) -> float:
        if self.alpha is not None:
            return self.alpha
        if self.algorithm == "uncorrected":
            return 0.0
        return DEFAULT_ALPHA[(self.law, self.reticulation)]

    @property
    def step_cap(self) -> float | None:
        if self.dt_cap is not None:
            return self.dt_cap
        if self.policy == "ecco" and self.law == "nonlinear" and self.reticulation == 2:
            return NONLINEAR_RET2_CAP
        return None

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        return f"{self.law}-ret{self.reticulation}-{self.algorithm}-{self.policy}"

    def model_params(self) -> QuarterCarParams:
        base = QuarterCarParams.linear if self.law == "linear" else QuarterCarParams.nonlinear
        return base(**self.params)

    def policy_object(self, tolerance: float | None = None) -> MasterPolicy:
        ecco = None
        if self.policy == "ecco":
            r = self.tolerance if tolerance is None else tolerance
            ecco = EccoConfig(r=r, **self.ecco)
        return MasterPolicy(
            T=self.T,
            dt=self.dt,
            order=self.order,
            nepce=NepceConfig(self.tuning, ALGORITHMS[self.algorithm], self.defect_rule),
            ecco=ecco,
            dt_cap=self.step_cap,
            residual_sampling=self.residual_sampling,
            parallel=self.parallel,
        )

    def with_(self, **changes) -> "BenchmarkScenario":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


def _opt_float(v: str) -> float | None:
    return None if v.strip().lower() in ("", "none") else float(v)


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# section -> key -> (scenario field or (dict field, key), converter)
_SCHEMA = {
    "model": {
        "law": ("law", str),
        "reticulation": ("reticulation", int),
        "excitation": ("excitation", str),
        "excitation_energy": ("excitation_energy", float),
        "micro_steps": ("micro_steps", int),
        "jacobian_floor": ("jacobian_floor", _opt_float),
        **{k: (("params", k), float) for k in ("m_c", "m_w", "k_c", "k_w", "d_c", "p", "n_d", "eps_v")},
    },
    "algorithm": {
        "correction": ("algorithm", str),
        "alpha": ("alpha", float),
        "order": ("order", int),
        "defect_rule": ("defect_rule", str),
        "residual_sampling": ("residual_sampling", str),
    },
    "stepping": {
        "policy": ("policy", str),
        "dt": ("dt", float),
        "duration": ("duration", float),
        "dt_cap": ("dt_cap", _opt_float),
        "tolerance": ("tolerance", float),
        "target_steps": ("target_steps", int),
        "parallel": ("parallel", _bool),
        "alpha_s": (("ecco", "alpha_s"), float),
        "dt_min": (("ecco", "dt_min"), float),
        "dt_max": (("ecco", "dt_max"), float),
        "theta_min": (("ecco", "theta_min"), float),
        "theta_max": (("ecco", "theta_max"), float),
        "E0": (("ecco", "E0"), float),
        "gain_denominator_offset": (("ecco", "gain_denominator_offset"), int),
    },
    "output": {
        "label": ("label", str),
        "dir": ("out_dir", str),
        "trace": ("trace_file", str),
        "summary": ("summary_file", str),
        "cache_dir": ("cache_dir", str),
    },
}


def _key_line(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return None


def parse_scenario(text: str) -> BenchmarkScenario:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("expected a [section] header", exc.lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ParseError(f"duplicate key {exc.option!r}", exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ParseError(f"duplicate section [{exc.section}]", exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", lineno) from exc

    kwargs: dict = {"params": {}, "ecco": {}}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise UnknownKey(f"line {_key_line(text, section)}: unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise UnknownKey(f"line {_key_line(text, section, key)}: unknown key {key!r} in [{section}]")
            target, conv = _SCHEMA[section][key]
            try:
                value = conv(raw)
            except ValueError as exc:
                raise ParseError(f"bad value for {key!r}: {exc}", _key_line(text, section, key)) from exc
            if isinstance(target, tuple):
                kwargs[target[0]][target[1]] = value
            else:
                kwargs[target] = value
    return BenchmarkScenario(**kwargs)


def load_scenario(path: str | Path) -> BenchmarkScenario:
    return parse_scenario(Path(path).read_text())

