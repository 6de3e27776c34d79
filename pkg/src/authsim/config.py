"""Scenario configuration files.

Configs are INI files whose sections mirror :class:`~authsim.sim.ScenarioConfig`::

    [scenario]
    G = 3
    M_C = 10
    [method]
    method = chi_square
    [thresholds]
    mode = optimized

Overrides use ``section.key=value`` or a bare ``key=value`` when the key name
is unambiguous.
"""

import configparser
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .sim import ScenarioConfig

# (section, key) -> (ScenarioConfig field, parser)
_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def _bool(text):
    try:
        return _BOOL[text.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}") from None


def _int(text):
    return int(text.strip())


def _float(text):
    return float(text.strip())


def _str(text):
    return text.strip()


def _list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


SCENARIO_KEYS = {
    ("scenario", "g"): ("G", _int),
    ("scenario", "n_state_p"): ("n_state_P", _int),
    ("scenario", "m_p"): ("M_P", _int),
    ("scenario", "m_c"): ("M_C", _int),
    ("scenario", "horizon"): ("horizon", _int),
    ("scenario", "packets_per_instant"): ("packets_per_instant", _int),
    ("scenario", "replications"): ("replications", _int),
    ("scenario", "seed"): ("seed", _int),
    ("scenario", "channel_structure"): ("channel_structure", _str),
    ("scenario", "snr_db"): ("snr_db", _float),
    ("attacker", "full_knowledge"): ("full_knowledge", _bool),
    ("attacker", "cov_scale"): ("attacker_cov_scale", _float),
    ("method", "method"): ("method", _str),
    ("method", "alpha"): ("alpha", _float),
    ("method", "p_fn_target"): ("p_fn_target", _float),
    ("thresholds", "mode"): ("threshold_mode", _str),
    ("thresholds", "eta_p"): ("eta_P", _float),
    ("thresholds", "eta_c"): ("eta_C", _float),
    ("thresholds", "tol"): ("opt_tol", _float),
    ("thresholds", "max_iter"): ("opt_max_iter", _int),
    ("thresholds", "warm_start"): ("warm_start", _bool),
}
EXTRA_KEYS = {
    ("sweep", "param"): _str,
    ("sweep", "values"): _list,
    ("sweep", "methods"): _list,
    ("output", "cdf_metrics"): _list,
}
CDF_METRICS = ("p_tn_emp", "p_fn1_emp", "p_fn2_emp",
               "p_tn_analytic", "p_fn1_analytic", "p_fn2_analytic")


@dataclass
class RunConfig:
    scenario: ScenarioConfig
    sweep_param: str = None
    sweep_values: list = field(default_factory=list)
    sweep_methods: list = field(default_factory=list)
    cdf_metrics: list = field(default_factory=lambda: ["p_tn_emp", "p_fn1_emp", "p_fn2_emp"])

    def effective(self):
        """Flat, JSON-friendly view of every effective setting."""
        out = {f"scenario.{k}": v for k, v in dataclasses.asdict(self.scenario).items()}
        out["sweep.param"] = self.sweep_param
        out["sweep.values"] = list(self.sweep_values)
        out["sweep.methods"] = list(self.sweep_methods)
        out["output.cdf_metrics"] = list(self.cdf_metrics)
        return out

    def digest(self):
        blob = json.dumps(self.effective(), sort_keys=True, default=_json_default)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _json_default(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    raise TypeError(type(v))


def _resolve_key(key):
    key = key.strip().lower()
    known = list(SCENARIO_KEYS) + list(EXTRA_KEYS)
    if "." in key:
        section, name = key.split(".", 1)
        if (section, name) in known:
            return section, name
        raise ConfigError(f"unknown config key {key!r}")
    hits = [k for k in known if k[1] == key]
    if len(hits) != 1:
        raise ConfigError(f"unknown or ambiguous config key {key!r}")
    return hits[0]


def parse_overrides(pairs):
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[_resolve_key(key)] = value
    return out


def from_entries(entries):
    """Build a :class:`RunConfig` from ``{(section, key): text}``."""
    kwargs = {}
    extra = {}
    for (section, key), text in entries.items():
        if (section, key) in SCENARIO_KEYS:
            name, parse = SCENARIO_KEYS[(section, key)]
            target = kwargs
        elif (section, key) in EXTRA_KEYS:
            name, parse = f"{section}.{key}", EXTRA_KEYS[(section, key)]
            target = extra
        else:
            raise ConfigError(f"unknown config key {section}.{key}")
        try:
            target[name] = parse(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}") from None
    scenario = ScenarioConfig(**kwargs)
    rc = RunConfig(scenario=scenario)
    rc.sweep_param = extra.get("sweep.param")
    rc.sweep_values = extra.get("sweep.values", [])
    rc.sweep_methods = extra.get("sweep.methods", [])
    if "output.cdf_metrics" in extra:
        rc.cdf_metrics = extra["output.cdf_metrics"]
    for m in rc.cdf_metrics:
        if m not in CDF_METRICS:
            raise ConfigError(f"unknown CDF metric {m!r}; choose from {', '.join(CDF_METRICS)}")
    if rc.sweep_param not in (None, "m_c", "eta"):
        raise ConfigError(f"sweep.param must be m_c or eta, got {rc.sweep_param!r}")
    return rc


def read_entries(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return {(s.lower(), k.lower()): v for s in parser.sections() for k, v in parser[s].items()}


def load(path, overrides=None):
    entries = read_entries(path)
    entries.update(parse_overrides(overrides))
    return from_entries(entries)


def preset_path(name):
    """Filesystem path of a shipped preset such as ``fig6`` or ``fig6.cfg``."""
    if not name.endswith(".cfg"):
        name += ".cfg"
    ref = resources.files("authsim") / "presets" / name
    if not ref.is_file():
        raise ConfigError(f"no preset named {name}")
    return Path(str(ref))


def list_presets():
    return sorted(p.name for p in (resources.files("authsim") / "presets").iterdir()
                  if p.name.endswith(".cfg"))
