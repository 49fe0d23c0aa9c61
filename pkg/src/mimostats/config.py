"""Scenario files: parsing, validation and serialization.

A scenario is a YAML document with explicit units::

    name: noniso-12x3
    scattering:
      doppler_hz: 10.0
      symbol_time_s: 0.005
      clusters:
        - {weight: 1/3, kappa: 6.0, mean_aoa_deg: 0.0}
        - {weight: 1/2, kappa: 6.0, mean_aoa_deg: 45.0}
        - {weight: 1/6, kappa: 8.0, mean_aoa_deg: 250.0}
    mimo: {n_tx: 3, n_rx: 12}
    snr_db: [-20.0, 30.0]
    lags: {start: 0, stop: 60}
    eigen_thresholds: [4.0, 8.0, 12.0]
    imi_threshold_sigmas: [-2.0, -1.0, 0.0, 1.0, 2.0]
    samples: 1048576
    seed: 12345
    tolerances: {imi_high_snr_corr: 0.03}

Weights may be written as fractions (``"1/3"``). Angles are in degrees.
Values are stored as written so that parse, serialize and parse again
gives an identical scenario.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .channel import MimoConfig, ScatteringCluster, ScatteringModel

__all__ = ["ConfigError", "ClusterSpec", "Tolerances", "Scenario", "load_scenario", "parse_scenario", "bundled_scenarios"]


class ConfigError(ValueError):
    """Invalid scenario file; the message names the file, line and field."""


@dataclass(frozen=True)
class ClusterSpec:
    weight: str | float
    kappa: float
    mean_aoa_deg: float

    @property
    def weight_value(self) -> float:
        return float(Fraction(self.weight)) if isinstance(self.weight, str) else float(self.weight)


@dataclass(frozen=True)
class Tolerances:
    """Pass/fail tolerances used by the validation report."""

    corr_se_mult: float = 3.0
    corr_abs_cap: float = 0.02
    moment_rel: float = 0.02
    variance_rel: float = 0.05
    eigen_level_rel: float = 0.05
    eigen_lcr_floor: float = 1e-2
    exceed_se_mult: float = 4.0
    channel_acf_mult: float = 5.0
    imi_exact_corr: float = 0.02
    imi_low_snr_corr: float = 0.02
    imi_high_snr_corr: float = 0.05
    imi_gaussian_lcr_rel: float = 0.10
    imi_exact_lcr_rel: float = 0.05
    low_snr_max_db: float = -10.0
    high_snr_min_db: float = 20.0
    gaussian_lcr_informational_snr_db: tuple[float, ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    doppler_hz: float
    symbol_time_s: float
    clusters: tuple[ClusterSpec, ...]
    n_tx: int
    n_rx: int
    snr_db: tuple[float, ...]
    lags: tuple[int, ...]
    eigen_thresholds: tuple[float, ...]
    imi_threshold_sigmas: tuple[float, ...] = (-2.0, -1.0, 0.0, 1.0, 2.0)
    samples: int = 1 << 20
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    description: str = ""

    @property
    def scattering(self) -> ScatteringModel:
        cl = tuple(ScatteringCluster(c.weight_value, float(c.kappa), math.radians(c.mean_aoa_deg)) for c in self.clusters)
        return ScatteringModel(cl, self.doppler_hz, self.symbol_time_s)

    @property
    def mimo(self) -> MimoConfig:
        return MimoConfig(self.n_tx, self.n_rx)

    def with_overrides(self, samples: int | None = None, seed: int | None = None) -> "Scenario":
        kw: dict[str, Any] = {}
        if samples is not None:
            kw["samples"] = int(samples)
        if seed is not None:
            kw["seed"] = int(seed)
        return replace(self, **kw)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name}
        if self.description:
            out["description"] = self.description
        out["scattering"] = {
            "doppler_hz": self.doppler_hz,
            "symbol_time_s": self.symbol_time_s,
            "clusters": [
                {"weight": c.weight, "kappa": c.kappa, "mean_aoa_deg": c.mean_aoa_deg} for c in self.clusters
            ],
        }
        out["mimo"] = {"n_tx": self.n_tx, "n_rx": self.n_rx}
        out["snr_db"] = list(self.snr_db)
        out["lags"] = _compress_lags(self.lags)
        out["eigen_thresholds"] = list(self.eigen_thresholds)
        out["imi_threshold_sigmas"] = list(self.imi_threshold_sigmas)
        out["samples"] = self.samples
        out["seed"] = self.seed
        tol = asdict(self.tolerances)
        default = asdict(Tolerances())
        diff = {k: (list(v) if isinstance(v, tuple) else v) for k, v in tol.items() if v != default[k]}
        if diff:
            out["tolerances"] = diff
        return out

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def _compress_lags(lags: tuple[int, ...]):
    if len(lags) >= 3:
        step = lags[1] - lags[0]
        if step > 0 and all(b - a == step for a, b in zip(lags, lags[1:])):
            d = {"start": lags[0], "stop": lags[-1]}
            if step != 1:
                d["step"] = step
            return d
    return list(lags)


# ---------------------------------------------------------------------------
# Parsing with line diagnostics
# ---------------------------------------------------------------------------


class _Locator:
    """Maps dotted field paths to source lines using the YAML node tree."""

    def __init__(self, node):
        self.node = node

    def line(self, path: tuple) -> int | None:
        node = self.node
        line = None
        for key in path:
            if node is None:
                break
            line = node.start_mark.line + 1
            if isinstance(node, yaml.MappingNode):
                nxt = None
                for k, v in node.value:
                    if k.value == key:
                        line = k.start_mark.line + 1
                        nxt = v
                        break
                node = nxt
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                node = node.value[key]
            else:
                node = None
        if node is not None:
            line = node.start_mark.line + 1
        return line


def _fmt_path(path: tuple) -> str:
    s = ""
    for p in path:
        s += f"[{p}]" if isinstance(p, int) else (f".{p}" if s else p)
    return s


class _Reader:
    def __init__(self, source: str, locator: _Locator):
        self.source = source
        self.loc = locator

    def fail(self, path: tuple, msg: str):
        line = self.loc.line(path)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: field '{_fmt_path(path)}': {msg}")

    def get(self, data: dict, path: tuple, key: str, required: bool = True, default=None):
        if not isinstance(data, dict):
            self.fail(path, "expected a mapping")
        if key not in data:
            if required:
                self.fail(path, f"missing required field '{key}'")
            return default
        return data[key]

    def number(self, value, path, positive=False, nonneg=False, integer=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            self.fail(path, "must be finite")
        if integer and int(value) != value:
            self.fail(path, f"expected an integer, got {value!r}")
        if positive and not value > 0:
            self.fail(path, f"must be positive, got {value!r}")
        if nonneg and value < 0:
            self.fail(path, f"must be nonnegative, got {value!r}")
        return int(value) if integer else value

    def number_list(self, value, path, **kw):
        if not isinstance(value, list) or not value:
            self.fail(path, "expected a nonempty list")
        return tuple(self.number(v, path + (i,), **kw) for i, v in enumerate(value))


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Parse scenario YAML text.

    Raises
    ------
    ConfigError
        With ``source:line: field 'path': message`` diagnostics.
    """
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark else ""
        raise ConfigError(f"{source}{line}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    r = _Reader(source, _Locator(node))
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a mapping at the top level")
    known = {f.name for f in fields(Scenario)} - {"n_tx", "n_rx", "doppler_hz", "symbol_time_s", "clusters"}
    known |= {"scattering", "mimo"}
    for key in data:
        if key not in known:
            r.fail((key,), "unknown field")

    name = r.get(data, (), "name")
    if not isinstance(name, str) or not name:
        r.fail(("name",), "expected a nonempty string")
    sc = r.get(data, (), "scattering")
    sp = ("scattering",)
    doppler = r.number(r.get(sc, sp, "doppler_hz"), sp + ("doppler_hz",), positive=True)
    ts = r.number(r.get(sc, sp, "symbol_time_s"), sp + ("symbol_time_s",), positive=True)
    raw_clusters = r.get(sc, sp, "clusters")
    if not isinstance(raw_clusters, list) or not raw_clusters:
        r.fail(sp + ("clusters",), "expected a nonempty list of clusters")
    clusters = []
    for i, c in enumerate(raw_clusters):
        cp = sp + ("clusters", i)
        w = r.get(c, cp, "weight")
        if isinstance(w, str):
            try:
                wv = float(Fraction(w.strip()))
            except (ValueError, ZeroDivisionError):
                r.fail(cp + ("weight",), f"cannot read {w!r} as a number or fraction")
        else:
            wv = r.number(w, cp + ("weight",))
        if not 0 < wv <= 1:
            r.fail(cp + ("weight",), f"must lie in (0, 1], got {w!r}")
        kappa = r.number(r.get(c, cp, "kappa"), cp + ("kappa",), nonneg=True)
        aoa = r.number(r.get(c, cp, "mean_aoa_deg", required=False, default=0.0), cp + ("mean_aoa_deg",))
        for key in c:
            if key not in ("weight", "kappa", "mean_aoa_deg"):
                r.fail(cp + (key,), "unknown field")
        clusters.append(ClusterSpec(w, kappa, aoa))
    total = math.fsum(c.weight_value for c in clusters)
    if abs(total - 1.0) > 1e-12:
        r.fail(sp + ("clusters",), f"weights must sum to 1, got {total!r}")

    mm = r.get(data, (), "mimo")
    n_tx = r.number(r.get(mm, ("mimo",), "n_tx"), ("mimo", "n_tx"), positive=True, integer=True)
    n_rx = r.number(r.get(mm, ("mimo",), "n_rx"), ("mimo", "n_rx"), positive=True, integer=True)
    snr = r.number_list(r.get(data, (), "snr_db"), ("snr_db",))

    lags_raw = r.get(data, (), "lags")
    if isinstance(lags_raw, dict):
        lp = ("lags",)
        start = r.number(r.get(lags_raw, lp, "start"), lp + ("start",), nonneg=True, integer=True)
        stop = r.number(r.get(lags_raw, lp, "stop"), lp + ("stop",), nonneg=True, integer=True)
        step = r.number(lags_raw.get("step", 1), lp + ("step",), positive=True, integer=True)
        if stop < start:
            r.fail(lp, "stop must not be below start")
        lags = tuple(range(start, stop + 1, step))
    else:
        lags = r.number_list(lags_raw, ("lags",), nonneg=True, integer=True)
    thr = r.number_list(r.get(data, (), "eigen_thresholds"), ("eigen_thresholds",), positive=True)
    sig = r.number_list(
        r.get(data, (), "imi_threshold_sigmas", required=False, default=[-2.0, -1.0, 0.0, 1.0, 2.0]),
        ("imi_threshold_sigmas",),
    )
    samples = r.number(r.get(data, (), "samples", required=False, default=1 << 20), ("samples",), integer=True)
    if not 2 <= samples <= 1 << 26:
        r.fail(("samples",), "must lie in [2, 2**26]")
    seed = r.number(r.get(data, (), "seed", required=False, default=0), ("seed",), nonneg=True, integer=True)
    if seed >= 1 << 64:
        r.fail(("seed",), "must fit in 64 bits")
    tol_raw = r.get(data, (), "tolerances", required=False, default={}) or {}
    if not isinstance(tol_raw, dict):
        r.fail(("tolerances",), "expected a mapping")
    tol_kw = {}
    tol_fields = {f.name: f for f in fields(Tolerances)}
    for key, val in tol_raw.items():
        tp = ("tolerances", key)
        if key not in tol_fields:
            r.fail(tp, "unknown tolerance")
        if key == "gaussian_lcr_informational_snr_db":
            tol_kw[key] = r.number_list(val, tp) if val else ()
        else:
            tol_kw[key] = r.number(val, tp)
    desc = data.get("description", "")
    if not isinstance(desc, str):
        r.fail(("description",), "expected a string")
    return Scenario(
        name=name,
        doppler_hz=doppler,
        symbol_time_s=ts,
        clusters=tuple(clusters),
        n_tx=n_tx,
        n_rx=n_rx,
        snr_db=snr,
        lags=lags,
        eigen_thresholds=thr,
        imi_threshold_sigmas=sig,
        samples=samples,
        seed=seed,
        tolerances=Tolerances(**tol_kw),
        description=desc,
    )


def bundled_scenarios() -> list[str]:
    """Names of the scenarios shipped with the package."""
    root = resources.files("mimostats") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_scenario(ref: str | Path) -> Scenario:
    """Load a scenario from a file path or a bundled scenario name."""
    path = Path(ref)
    if path.suffix in (".yaml", ".yml") or path.exists():
        if not path.exists():
            raise ConfigError(f"{path}: no such scenario file")
        return parse_scenario(path.read_text(encoding="utf-8"), str(path))
    res = resources.files("mimostats") / "scenarios" / f"{ref}.yaml"
    if not res.is_file():
        raise ConfigError(f"unknown scenario {ref!r}; bundled scenarios: {', '.join(bundled_scenarios())}")
    return parse_scenario(res.read_text(encoding="utf-8"), f"{ref}.yaml")
