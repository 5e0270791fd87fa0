"""Run configuration: plain-text config files, resolution into concrete
simulation inputs, and the sweep/convergence variants.

The file format is INI with one section per concern::

    [run]
    scenario = coupled          ; a battery name, or "custom"
    out_dir = runs/coupled
    seed = 1234

    [material]                  ; optional overrides / custom laws
    gamma_family = saturating
    gamma0 = 1.0
    delta = 0.1
    ...

Physical keys carry the symbol names used throughout (gamma0, delta, K_f,
alpha, a, L, T_end, kappa, q) so artifacts stay traceable.  A parsed
RunConfig serializes back to an equivalent file: parse(serialize(cfg)) == cfg.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics as diag
from . import dynamics as dyn
from . import grid as g
from . import material as mat
from . import scenarios as sc
from .errors import ConfigError

SWEEP_AXES = ("delta", "alpha", "kappa", "grid_n", "dt")


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved experiment: scenario plus run-level controls.

    ``dump_fields`` additionally writes one x,u,v,theta snapshot file per
    diagnostic sample into ``<out_dir>/fields/``.
    """

    scenario: sc.Scenario
    out_dir: str = "runs/out"
    seed: int = 0
    k_trials: int = 3
    dump_fields: bool = False

    def __post_init__(self):
        if self.k_trials < 1:
            raise ConfigError("k_trials must be at least 1")

    @property
    def scheme(self) -> dyn.SchemeConfig:
        return self.scenario.scheme

    @property
    def monitors(self) -> diag.MonitorConfig:
        return self.scenario.monitors


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    axis: str
    values: tuple[float, ...]
    workers: int = 1

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep needs a nonempty value list")


@dataclass(frozen=True)
class ConvergeConfig:
    base: RunConfig
    n_values: tuple[int, ...]
    dt_scaling: str = "fixed"  # or "quadratic": dt ~ dx^2 relative to first n

    def __post_init__(self):
        if len(self.n_values) < 2:
            raise ConfigError("convergence study needs at least two grid sizes")
        if self.dt_scaling not in ("fixed", "quadratic"):
            raise ConfigError("dt_scaling must be 'fixed' or 'quadratic'")


def apply_axis(config: RunConfig, axis: str, value: float) -> RunConfig:
    """New RunConfig with one swept parameter replaced."""
    scen = config.scenario
    if axis == "delta":
        scen = replace(scen, laws=replace(scen.laws, delta=float(value)))
    elif axis == "alpha":
        scen = replace(scen, laws=replace(scen.laws, alpha=float(value)))
    elif axis == "kappa":
        scen = replace(scen, monitors=replace(scen.monitors, kappa=float(value)))
    elif axis == "grid_n":
        scen = replace(scen, n=int(value))
    elif axis == "dt":
        scen = replace(scen, scheme=replace(scen.scheme, dt_initial=float(value),
                                            dt_max=float(value)))
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    return replace(config, scenario=scen)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def _get(parser, section, key, conv, default=None, required=False):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"config field [{section}] {key} = {raw!r}: {exc}") from exc
    if required:
        raise ConfigError(f"missing required config field [{section}] {key}")
    return default


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _load_table(path: str) -> np.ndarray:
    try:
        tab = np.loadtxt(path, dtype=float)
    except OSError as exc:
        raise ConfigError(f"cannot read table file {path!r}: {exc}") from exc
    return np.atleast_2d(tab)


def _parse_laws(parser, base: mat.MaterialLaws | None) -> mat.MaterialLaws:
    sec = "material"
    defaults = base or mat.MaterialLaws()
    kwargs = dict(
        gamma_family=_get(parser, sec, "gamma_family", str, defaults.gamma_family),
        f_family=_get(parser, sec, "f_family", str, defaults.f_family),
        gamma0=_get(parser, sec, "gamma0", float, defaults.gamma0),
        delta=_get(parser, sec, "delta", float, defaults.delta),
        K_f=_get(parser, sec, "K_f", float, defaults.K_f),
        alpha=_get(parser, sec, "alpha", float, defaults.alpha),
        gamma_table=defaults.gamma_table,
        f_table=defaults.f_table,
    )
    gamma_table_path = _get(parser, sec, "gamma_table", str, None)
    if gamma_table_path:
        kwargs["gamma_table"] = _load_table(gamma_table_path)
    f_table_path = _get(parser, sec, "f_table", str, None)
    if f_table_path:
        kwargs["f_table"] = _load_table(f_table_path)
    return mat.MaterialLaws(**kwargs)


def _parse_gen_params(parser) -> dict:
    if not parser.has_section("initial"):
        return {}
    params = {}
    for key, raw in parser.items("initial"):
        if key == "generator":
            continue
        try:
            params[key] = int(raw) if key == "k" else float(raw)
        except ValueError as exc:
            raise ConfigError(f"config field [initial] {key} = {raw!r}: {exc}") from exc
    return params


def parse_config(source) -> RunConfig:
    """Parse a run config from a path or a file-like object."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if hasattr(source, "read"):
        parser.read_file(source)
    else:
        loaded = parser.read(source)
        if not loaded:
            raise ConfigError(f"cannot read config file {source!r}")

    name = _get(parser, "run", "scenario", str, "custom")
    if name != "custom":
        base = sc.battery_scenario(name)
    else:
        base = None

    laws = _parse_laws(parser, base.laws if base else None)
    length = _get(parser, "domain", "L", float, base.length if base else 1.0)
    n = _get(parser, "domain", "n", int, base.n if base else 129)
    a = _get(parser, "domain", "a", float, base.a if base else 1.0)

    generator = _get(parser, "initial", "generator", str,
                     base.generator if base else None,
                     required=base is None)
    gen_params = _parse_gen_params(parser) or (dict(base.gen_params) if base else {})
    mms_id = _get(parser, "run", "mms_case", str, base.mms_id if base else None)

    base_scheme = base.scheme if base else dyn.SchemeConfig()
    scheme = dyn.SchemeConfig(
        dt_initial=_get(parser, "time", "dt_initial", float, base_scheme.dt_initial),
        dt_max=_get(parser, "time", "dt_max", float, base_scheme.dt_max),
        cfl_safety=_get(parser, "time", "cfl_safety", float, base_scheme.cfl_safety),
        scheme=_get(parser, "time", "scheme", str, base_scheme.scheme),
        positivity_policy=_get(parser, "time", "positivity_policy", str,
                               base_scheme.positivity_policy),
        positivity_tolerance=_get(parser, "time", "positivity_tolerance", float,
                                  base_scheme.positivity_tolerance),
        adaptive=_get(parser, "time", "adaptive", _bool, base_scheme.adaptive),
        solver_tol=_get(parser, "time", "solver_tol", float, base_scheme.solver_tol),
        max_step_retries=_get(parser, "time", "max_step_retries", int,
                              base_scheme.max_step_retries),
    )

    base_mon = base.monitors if base else diag.MonitorConfig()
    monitors = diag.MonitorConfig(
        q=_get(parser, "monitors", "q", float, base_mon.q),
        kappa=_get(parser, "monitors", "kappa", float, base_mon.kappa),
        T0=_get(parser, "monitors", "T0", float, base_mon.T0),
        cadence=_get(parser, "monitors", "cadence", int, base_mon.cadence),
        blowup_threshold=_get(parser, "monitors", "blowup_threshold", float,
                              base_mon.blowup_threshold),
        blowup_window=_get(parser, "monitors", "blowup_window", int, base_mon.blowup_window),
        blowup_rate_min=_get(parser, "monitors", "blowup_rate_min", float,
                             base_mon.blowup_rate_min),
    )

    t_end = _get(parser, "time", "T_end", float, base.t_end if base else 1.0)
    tag = _get(parser, "run", "tag", str, base.tag if base else "generic")

    scenario = sc.Scenario(
        name=name if name != "custom" else _get(parser, "run", "name", str, "custom"),
        laws=laws, a=a, length=length, n=n,
        generator=generator, gen_params=gen_params,
        t_end=t_end, tag=tag, scheme=scheme, monitors=monitors, mms_id=mms_id,
    )
    return RunConfig(
        scenario=scenario,
        out_dir=_get(parser, "run", "out_dir", str, "runs/out"),
        seed=_get(parser, "run", "seed", int, 0),
        k_trials=_get(parser, "run", "k_trials", int, 3),
        dump_fields=_get(parser, "run", "dump_fields", _bool, False),
    )


def parse_sweep_config(source) -> SweepConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if hasattr(source, "read"):
        text = source.read()
        parser.read_string(text)
        base = parse_config(io.StringIO(text))
    else:
        loaded = parser.read(source)
        if not loaded:
            raise ConfigError(f"cannot read config file {source!r}")
        base = parse_config(source)
    if not parser.has_section("sweep"):
        raise ConfigError("sweep config needs a [sweep] section")
    axis = _get(parser, "sweep", "axis", str, required=True)
    raw_values = _get(parser, "sweep", "values", str, required=True)
    values = tuple(float(v) for v in raw_values.replace(",", " ").split())
    if not values:
        raise ConfigError("sweep value list is empty")
    workers = _get(parser, "sweep", "workers", int, 1)
    return SweepConfig(base=base, axis=axis, values=values, workers=workers)


def parse_converge_config(source) -> ConvergeConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if hasattr(source, "read"):
        text = source.read()
        parser.read_string(text)
        base = parse_config(io.StringIO(text))
    else:
        loaded = parser.read(source)
        if not loaded:
            raise ConfigError(f"cannot read config file {source!r}")
        base = parse_config(source)
    if not parser.has_section("converge"):
        raise ConfigError("convergence config needs a [converge] section")
    raw_values = _get(parser, "converge", "n_values", str, required=True)
    n_values = tuple(int(v) for v in raw_values.replace(",", " ").split())
    dt_scaling = _get(parser, "converge", "dt_scaling", str, "fixed")
    return ConvergeConfig(base=base, n_values=n_values, dt_scaling=dt_scaling)


# --------------------------------------------------------------------------
# serialization (round-trips through parse_config)
# --------------------------------------------------------------------------


def serialize_config(config: RunConfig) -> str:
    """Emit an INI document that parses back to an identical RunConfig.

    Tabulated laws cannot round-trip through a flat file (they reference an
    external table); serializing them raises.
    """
    scen = config.scenario
    if scen.laws.gamma_table is not None or scen.laws.f_table is not None:
        raise ConfigError("tabulated laws serialize by table path only; keep the original config")
    parser = configparser.ConfigParser()
    parser["run"] = {
        "scenario": "custom",
        "name": scen.name,
        "out_dir": config.out_dir,
        "seed": repr(config.seed),
        "k_trials": repr(config.k_trials),
        "dump_fields": repr(config.dump_fields),
        "tag": scen.tag,
    }
    if scen.mms_id is not None:
        parser["run"]["mms_case"] = scen.mms_id
    parser["material"] = {
        "gamma_family": scen.laws.gamma_family,
        "f_family": scen.laws.f_family,
        "gamma0": repr(scen.laws.gamma0),
        "delta": repr(scen.laws.delta),
        "K_f": repr(scen.laws.K_f),
        "alpha": repr(scen.laws.alpha),
    }
    parser["domain"] = {"L": repr(scen.length), "n": repr(scen.n), "a": repr(scen.a)}
    parser["initial"] = {"generator": scen.generator}
    for key, val in scen.gen_params.items():
        parser["initial"][key] = repr(val)
    parser["time"] = {
        "T_end": repr(scen.t_end),
        "scheme": scen.scheme.scheme,
        "dt_initial": repr(scen.scheme.dt_initial),
        "dt_max": repr(scen.scheme.dt_max),
        "cfl_safety": repr(scen.scheme.cfl_safety),
        "positivity_policy": scen.scheme.positivity_policy,
        "positivity_tolerance": repr(scen.scheme.positivity_tolerance),
        "adaptive": repr(scen.scheme.adaptive),
        "solver_tol": repr(scen.scheme.solver_tol),
        "max_step_retries": repr(scen.scheme.max_step_retries),
    }
    parser["monitors"] = {
        "q": repr(scen.monitors.q),
        "kappa": repr(scen.monitors.kappa),
        "T0": repr(scen.monitors.T0),
        "cadence": repr(scen.monitors.cadence),
        "blowup_threshold": repr(scen.monitors.blowup_threshold),
        "blowup_window": repr(scen.monitors.blowup_window),
        "blowup_rate_min": repr(scen.monitors.blowup_rate_min),
    }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
