"""Run configuration: INI-style text to :class:`SimConfig` and back.

Layout::

    [grid]       nx, ny, Lx, Ly
    [physics]    epsilon, K, mode
    [species.N]  z, D, gamma (or gamma.bottom/top/left/right), c0
    [boundary]   h (or h.bottom/top/left/right)
    [flow]       stream
    [time]       T_final, cfl, picard_k, picard_tol, dt
    [output]     every, snapshots, p_monitor
    [numerics]   interp_order, advection

Species are numbered from 1 without gaps. ``serialize`` emits a canonical
form: fixed order, ``repr`` floats, canonical profile text, so that
``serialize(parse_config(serialize(c)))`` is byte-identical.
"""
import configparser
import hashlib
import json
import re
from dataclasses import asdict, dataclass

from . import __version__
from .coupling import SimConfig, SpeciesConfig
from .errors import ConfigError, ValidationError
from .profiles import EDGES

_SCHEMA = {
    "grid": {"nx": int, "ny": int, "Lx": float, "Ly": float},
    "physics": {"epsilon": float, "K": float, "mode": str, "force_sign": float},
    "boundary": {"h": str, **{f"h.{e}": str for e in EDGES}},
    "flow": {"stream": str},
    "time": {"T_final": float, "cfl": float, "picard_k": int, "picard_tol": float, "dt": float},
    "output": {"every": float, "snapshots": bool, "p_monitor": float},
    "numerics": {"interp_order": int, "advection": str},
}
_SPECIES = {"z": float, "D": float, "gamma": str, "c0": str, **{f"gamma.{e}": str for e in EDGES}}
_SPECIES_RE = re.compile(r"^species\.([1-9][0-9]*)$")
_REQUIRED = {"grid": ("nx", "ny")}


def _find_line(text, section, key=None):
    """1-based line of ``[section]`` or of ``key`` inside it, else None."""
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section:
            k = re.split(r"[=:]", line, maxsplit=1)[0].strip()
            if k == key:
                return n
    return None


def _convert(text, section, key, raw, kind):
    line = _find_line(text, section, key)
    try:
        if kind is bool:
            v = raw.strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw.strip())
        if kind is float:
            return float(raw.strip())
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as {kind.__name__}", line=line, key=key) from None


def _edges(values, base):
    if base in values:
        if any(f"{base}.{e}" in values for e in EDGES):
            raise ValidationError(f"give either {base} or {base}.<edge>, not both")
        return values[base]
    per = {e: values.get(f"{base}.{e}") for e in EDGES}
    if all(v is None for v in per.values()):
        return None
    missing = [e for e, v in per.items() if v is None]
    if missing:
        raise ValidationError(f"{base}: missing edges {missing}")
    return per


def parse_config(text):
    """Parse configuration text into a validated :class:`SimConfig`.

    Raises
    ------
    ConfigError
        Malformed text, unknown section or key, bad value type (with line).
    ValidationError
        A physical or numerical constraint is violated.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"), strict=True,
                                   default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", line=e.lineno) from None
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", line=e.lineno, key=e.option) from None
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("text before the first [section]", line=e.lineno) from None
    except configparser.ParsingError as e:
        line = e.errors[0][0] if getattr(e, "errors", None) else None
        raise ConfigError("malformed line", line=line) from None

    values = {}
    species = {}
    for section in cp.sections():
        m = _SPECIES_RE.match(section)
        schema = _SPECIES if m else _SCHEMA.get(section)
        if schema is None:
            raise ConfigError(f"unknown section [{section}]", line=_find_line(text, section))
        target = species.setdefault(int(m.group(1)), {}) if m else values.setdefault(section, {})
        for key, raw in cp.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line=_find_line(text, section, key), key=key)
            target[key] = _convert(text, section, key, raw, schema[key])
    for section, keys in _REQUIRED.items():
        for key in keys:
            if key not in values.get(section, {}):
                raise ConfigError(f"missing required key {key!r} in [{section}]", line=_find_line(text, section), key=key)
    if not species:
        raise ConfigError("at least one [species.N] section required")
    if sorted(species) != list(range(1, len(species) + 1)):
        raise ConfigError(f"species sections must be numbered 1..N without gaps, got {sorted(species)}")

    sp_cfg = []
    for i in sorted(species):
        s = species[i]
        for key in ("z", "D"):
            if key not in s:
                raise ConfigError(f"missing required key {key!r} in [species.{i}]",
                                  line=_find_line(text, f"species.{i}"), key=key)
        gamma = _edges(s, "gamma") or "const:0"
        sp_cfg.append(SpeciesConfig(s["z"], s["D"], gamma, s.get("c0", "lift")))

    g, ph, b = values.get("grid", {}), values.get("physics", {}), values.get("boundary", {})
    tm, out, nm = values.get("time", {}), values.get("output", {}), values.get("numerics", {})
    return SimConfig(
        nx=g["nx"], ny=g["ny"], species=sp_cfg, Lx=g.get("Lx", 1.0), Ly=g.get("Ly", 1.0),
        mode=ph.get("mode", "Unrestricted"), epsilon=ph.get("epsilon", 1.0), K=ph.get("K", 1.0),
        h=_edges(b, "h") or "const:0", stream=values.get("flow", {}).get("stream", "const:0"),
        T_final=tm.get("T_final", 1.0), cfl=tm.get("cfl", 0.5), picard_k=tm.get("picard_k", 1),
        picard_tol=tm.get("picard_tol", 1e-10), dt=tm.get("dt"),
        output_every=out.get("every"), snapshots=out.get("snapshots", True), p_monitor=out.get("p_monitor", 4.0),
        interp_order=nm.get("interp_order", 1), advection=nm.get("advection", "sg"),
        force_sign=ph.get("force_sign", 1.0),
    )


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def _f(v):
    return repr(float(v))


def _edge_lines(name, edges):
    vals = [edges[e] for e in EDGES]
    if all(v == vals[0] for v in vals):
        return [f"{name} = {vals[0]}"]
    return [f"{name}.{e} = {edges[e]}" for e in EDGES]


def serialize(config):
    """Canonical text of a config."""
    c = config
    lines = ["[grid]", f"nx = {int(c.nx)}", f"ny = {int(c.ny)}", f"Lx = {_f(c.Lx)}", f"Ly = {_f(c.Ly)}", "",
             "[physics]", f"epsilon = {_f(c.epsilon)}", f"K = {_f(c.K)}", f"mode = {c.mode}"]
    if c.force_sign != 1.0:
        lines.append(f"force_sign = {_f(c.force_sign)}")
    lines.append("")
    for i, s in enumerate(c.species, start=1):
        lines += [f"[species.{i}]", f"z = {_f(s.z)}", f"D = {_f(s.D)}", *_edge_lines("gamma", s.gamma),
                  f"c0 = {s.c0}", ""]
    lines += ["[boundary]", *_edge_lines("h", c.h), "", "[flow]", f"stream = {c.stream}", "",
              "[time]", f"T_final = {_f(c.T_final)}", f"cfl = {_f(c.cfl)}", f"picard_k = {int(c.picard_k)}",
              f"picard_tol = {_f(c.picard_tol)}"]
    if c.dt is not None:
        lines.append(f"dt = {_f(c.dt)}")
    lines += ["", "[output]"]
    if c.output_every is not None:
        lines.append(f"every = {_f(c.output_every)}")
    lines += [f"snapshots = {'true' if c.snapshots else 'false'}", f"p_monitor = {_f(c.p_monitor)}", "",
              "[numerics]", f"interp_order = {int(c.interp_order)}", f"advection = {c.advection}", ""]
    return "\n".join(lines)


def checksum(config):
    return hashlib.sha256(serialize(config).encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    config_text: str
    input_path: str
    output_dir: str
    version: str
    checksum: str

    @classmethod
    def build(cls, config, input_path, output_dir):
        return cls(serialize(config), str(input_path), str(output_dir), __version__, checksum(config))

    def validate(self):
        digest = hashlib.sha256(self.config_text.encode("utf-8")).hexdigest()
        if digest != self.checksum:
            raise ValidationError("manifest checksum does not match its config text")
        return self

    @property
    def config(self):
        return parse_config(self.config_text)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            return cls(**json.load(fh)).validate()
