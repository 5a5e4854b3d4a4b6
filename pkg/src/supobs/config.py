"""Experiment configuration: INI-style key-value sections.

Key names are stable across releases: plant.kind and plant constants,
theta.lower/upper, sampling.mode/m/alpha/Td, monitor.lambda,
sim.dt/t_final/record_stride, the input descriptor under input.*, initial
conditions under init.*, truth.p_star, and output paths under output.*.
Parsing, serializing and re-parsing a file reproduces the configuration
exactly (floats are written in shortest round-trip form).
"""

import configparser
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .errors import ConfigError

__all__ = ["ExperimentConfig", "parse_config", "parse_config_text", "serialize_config"]

_PLANT_KINDS = ("scalar_linear", "jansen_rit")
_INPUT_KINDS = ("piecewise_constant_uniform", "sin", "constant", "zero")
_GAIN_MODES = ("design", "synthesize", "load")


@dataclass
class ExperimentConfig:
    plant_kind: str
    theta_lower: np.ndarray
    theta_upper: np.ndarray
    mode: str
    m: int
    monitor_lambda: float
    dt: float
    t_final: float
    record_stride: int
    input_kind: str
    p_star: np.ndarray
    x0: np.ndarray
    plant_constants: Dict[str, float] = field(default_factory=dict)
    alpha: Optional[float] = None
    Td: Optional[float] = None
    input_params: Dict[str, float] = field(default_factory=dict)
    xhat0: Optional[np.ndarray] = None  # None means zeros
    observer_poles: Optional[List[float]] = None
    gains_mode: str = "design"
    gains_certificate: Optional[str] = None
    guard_threshold: float = 1e6
    out_trace: str = "trace.csv"
    out_yerr: Optional[str] = None
    table_m_values: Optional[List[int]] = None

    def validate(self):
        if self.plant_kind not in _PLANT_KINDS:
            raise ConfigError(f"plant.kind must be one of {_PLANT_KINDS}, got {self.plant_kind!r}")
        if self.theta_lower.shape != self.theta_upper.shape:
            raise ConfigError("theta.lower and theta.upper must have the same length")
        if not np.all(self.theta_lower < self.theta_upper):
            raise ConfigError("theta.lower must be < theta.upper componentwise")
        if self.mode not in ("static", "dynamic"):
            raise ConfigError(f"sampling.mode must be 'static' or 'dynamic', got {self.mode!r}")
        if self.m < 1:
            raise ConfigError("sampling.m must be >= 1")
        if self.mode == "dynamic":
            if self.alpha is None or self.Td is None:
                raise ConfigError("dynamic mode requires sampling.alpha and sampling.Td")
            if not (0.0 < self.alpha < 1.0):
                raise ConfigError(f"sampling.alpha must satisfy alpha in (0, 1), got {self.alpha}")
            if self.Td <= 0:
                raise ConfigError("sampling.Td must be > 0")
        if self.monitor_lambda <= 0:
            raise ConfigError("monitor.lambda must be > 0")
        if self.dt <= 0 or self.t_final <= 0 or self.dt > self.t_final:
            raise ConfigError("need 0 < sim.dt <= sim.t_final")
        if self.record_stride < 1:
            raise ConfigError("sim.record_stride must be >= 1")
        if self.input_kind not in _INPUT_KINDS:
            raise ConfigError(f"input.kind must be one of {_INPUT_KINDS}, got {self.input_kind!r}")
        if self.gains_mode not in _GAIN_MODES:
            raise ConfigError(f"observer.gains must be one of {_GAIN_MODES}")
        if self.gains_mode == "load" and not self.gains_certificate:
            raise ConfigError("observer.gains = load requires observer.certificate")
        if self.p_star.shape != self.theta_lower.shape:
            raise ConfigError("truth.p_star must have the same length as theta bounds")
        return self


def _vec(text):
    return np.array([float(v) for v in text.replace(",", " ").split()], dtype=float)


def _fmt_vec(arr):
    return " ".join(repr(float(v)) for v in np.atleast_1d(arr))


def parse_config_text(text, name="<config>"):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=name)
    except configparser.Error as exc:
        raise ConfigError(f"{name}: {exc}") from exc

    def need(section, key):
        if not cp.has_option(section, key):
            raise ConfigError(f"{name}: missing required key [{section}] {key}")
        return cp.get(section, key)

    def opt(section, key, default=None):
        return cp.get(section, key) if cp.has_option(section, key) else default

    try:
        plant_kind = need("plant", "kind").strip()
        constants = {
            k: float(v) for k, v in cp.items("plant") if k != "kind"
        } if cp.has_section("plant") else {}
        mode = need("sampling", "mode").strip()
        alpha = opt("sampling", "alpha")
        Td = opt("sampling", "td")
        xhat0_raw = opt("init", "xhat0", "zeros").strip()
        poles_raw = opt("observer", "poles")
        m_values_raw = opt("table", "m_values")
        cfg = ExperimentConfig(
            plant_kind=plant_kind,
            plant_constants=constants,
            theta_lower=_vec(need("theta", "lower")),
            theta_upper=_vec(need("theta", "upper")),
            mode=mode,
            m=int(need("sampling", "m")),
            alpha=None if alpha is None else float(alpha),
            Td=None if Td is None else float(Td),
            monitor_lambda=float(need("monitor", "lambda")),
            dt=float(need("sim", "dt")),
            t_final=float(need("sim", "t_final")),
            record_stride=int(opt("sim", "record_stride", "1")),
            input_kind=need("input", "kind").strip(),
            input_params={k: float(v) for k, v in cp.items("input") if k != "kind"},
            x0=_vec(need("init", "x0")),
            xhat0=None if xhat0_raw == "zeros" else _vec(xhat0_raw),
            p_star=_vec(need("truth", "p_star")),
            observer_poles=None if poles_raw is None else [float(v) for v in poles_raw.split()],
            gains_mode=opt("observer", "gains", "design").strip(),
            gains_certificate=opt("observer", "certificate"),
            guard_threshold=float(opt("guard", "threshold", "1e6")),
            out_trace=opt("output", "trace", "trace.csv").strip(),
            out_yerr=opt("output", "yerr"),
            table_m_values=None if m_values_raw is None
            else [int(v) for v in m_values_raw.split()],
        )
    except ConfigError:
        raise
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    return cfg.validate()


def parse_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, name=str(path))


def serialize_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser()
    cp["plant"] = {"kind": cfg.plant_kind}
    for k, v in cfg.plant_constants.items():
        cp["plant"][k] = repr(float(v))
    cp["theta"] = {"lower": _fmt_vec(cfg.theta_lower), "upper": _fmt_vec(cfg.theta_upper)}
    cp["sampling"] = {"mode": cfg.mode, "m": str(cfg.m)}
    if cfg.alpha is not None:
        cp["sampling"]["alpha"] = repr(float(cfg.alpha))
    if cfg.Td is not None:
        cp["sampling"]["Td"] = repr(float(cfg.Td))
    cp["monitor"] = {"lambda": repr(float(cfg.monitor_lambda))}
    cp["sim"] = {
        "dt": repr(float(cfg.dt)),
        "t_final": repr(float(cfg.t_final)),
        "record_stride": str(cfg.record_stride),
    }
    cp["input"] = {"kind": cfg.input_kind}
    for k, v in cfg.input_params.items():
        cp["input"][k] = repr(float(v))
    cp["init"] = {
        "x0": _fmt_vec(cfg.x0),
        "xhat0": "zeros" if cfg.xhat0 is None else _fmt_vec(cfg.xhat0),
    }
    cp["truth"] = {"p_star": _fmt_vec(cfg.p_star)}
    observer = {}
    if cfg.observer_poles is not None:
        observer["poles"] = " ".join(repr(float(v)) for v in cfg.observer_poles)
    observer["gains"] = cfg.gains_mode
    if cfg.gains_certificate:
        observer["certificate"] = cfg.gains_certificate
    cp["observer"] = observer
    cp["guard"] = {"threshold": repr(float(cfg.guard_threshold))}
    output = {"trace": cfg.out_trace}
    if cfg.out_yerr:
        output["yerr"] = cfg.out_yerr
    cp["output"] = output
    if cfg.table_m_values is not None:
        cp["table"] = {"m_values": " ".join(str(v) for v in cfg.table_m_values)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
