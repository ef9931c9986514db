"""Experiment configs: JSON in, validated model objects out.

Format errors raise ConfigError (exit 2); estimator preconditions detected at
validation time raise PreconditionError (exit 3). Both messages start with the
offending config path, e.g. ``grids.eps``.
"""
import copy
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import maps, measures
from .capacity import SCALE_FLOOR_FACTOR, mass_floor
from .errors import ExpanseError, PreconditionError, StructuralError
from .exponents import FLOOR_FACTOR, check_eps_grid
from .seeding import stream
from .spaces import Circle, Product, SymbolSpace, UnitInterval

OPERATIONS = ("exponent-map", "exponent-measure", "capacity", "entropy", "block-entropy",
              "verify-A", "verify-B", "verify-C", "verify-laws", "contraction-chain")


class ConfigError(ExpanseError):
    def __init__(self, where, message):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


def _get(d, key, where, kind=None, default=...):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{where}.{key}" if where else key, "missing")
        return default
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(f"{where}.{key}" if where else key, f"expected {getattr(kind, '__name__', kind)}")
    return v


def expand_grid(spec, where):
    """Explicit list, or {start, ratio | step, count}."""
    if isinstance(spec, list):
        try:
            return [float(v) for v in spec]
        except (TypeError, ValueError):
            raise ConfigError(where, "grid entries must be numbers") from None
    if isinstance(spec, dict):
        start = float(_get(spec, "start", where, (int, float)))
        count = int(_get(spec, "count", where, int))
        if count < 1:
            raise ConfigError(f"{where}.count", "must be >= 1")
        if "ratio" in spec:
            return [start * float(spec["ratio"]) ** k for k in range(count)]
        if "step" in spec:
            return [start + float(spec["step"]) * k for k in range(count)]
        raise ConfigError(where, "grid generator needs 'ratio' or 'step'")
    raise ConfigError(where, "grid must be a list or a {start, ratio|step, count} object")


def build_space(spec, where="space"):
    if not isinstance(spec, dict):
        raise ConfigError(where, "expected an object")
    kind = _get(spec, "type", where, str)
    try:
        if kind == "interval":
            return UnitInterval()
        if kind == "circle":
            return Circle()
        if kind == "symbol":
            return SymbolSpace(int(spec.get("m", 2)), int(_get(spec, "L", where, int)))
        if kind == "product":
            factors = _get(spec, "factors", where, list)
            return Product(tuple(build_space(f, f"{where}.factors[{i}]") for i, f in enumerate(factors)))
    except StructuralError as exc:
        raise ConfigError(where, str(exc)) from None
    raise ConfigError(f"{where}.type", f"unknown space {kind!r}")


def build_map(spec, space, cloud, where="map"):
    if not isinstance(spec, dict):
        raise ConfigError(where, "expected an object")
    kind = _get(spec, "type", where, str)
    try:
        if kind == "times_m":
            m = maps.TimesM(int(spec.get("m", 2)))
        elif kind == "rotation":
            m = maps.Rotation(float(_get(spec, "alpha", where)))
        elif kind == "tent":
            m = maps.Tent(float(spec.get("s", 2.0)))
        elif kind == "piecewise_linear":
            m = maps.PiecewiseLinear(tuple(_get(spec, "breakpoints", where, list)),
                                     tuple(_get(spec, "slopes", where, list)), float(spec.get("start", 0.0)))
        elif kind == "contraction":
            m = maps.Contraction(float(_get(spec, "c", where)))
        elif kind == "constant":
            m = maps.ConstantMap(space, tuple(np.atleast_1d(_get(spec, "target", where))))
        elif kind == "shift":
            m = maps.Shift(space, spec.get("mode", "pad"))
        elif kind == "lookup":
            m = maps.LookupTable(cloud, tuple(_get(spec, "images", where, list)))
        else:
            raise ConfigError(f"{where}.type", f"unknown map {kind!r}")
    except (StructuralError, TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None
    if m.space != space:
        raise ConfigError(where, f"map {kind!r} does not act on the configured space")
    return m


def build_cloud(spec, space, seed, where="cloud"):
    """(cloud, generator measure)."""
    if not isinstance(spec, dict):
        raise ConfigError(where, "expected an object")
    gen = _get(spec, "generator", where, str)
    try:
        if gen == "csv":
            return measures.read_measure_csv(_get(spec, "path", where, str), space, spec.get("resolution"))
        cloud, mu = measures.sample_measure(space, gen, n=int(spec.get("n", 1)), seed=seed,
                                            p=spec.get("p", 0.5), depth=spec.get("depth"))
    except OSError as exc:
        raise ConfigError(f"{where}.path", str(exc)) from None
    except (StructuralError, PreconditionError) as exc:
        raise ConfigError(where, str(exc)) from None
    if "resolution" in spec:
        cloud.resolution = float(spec["resolution"])
    return cloud, mu


def _index(spec, cloud, where):
    if "index" in spec:
        i = int(spec["index"])
        if not 0 <= i < len(cloud):
            raise ConfigError(f"{where}.index", f"out of range for a cloud of {len(cloud)} points")
        return i
    try:
        return int(cloud.locate(cloud.space.coerce(_get(spec, "point", where))[None, :])[0])
    except StructuralError as exc:
        raise ConfigError(f"{where}.point", str(exc)) from None


def build_measures(specs, cloud, generated, seed, where="measures"):
    """Named measures; a ``diracs`` entry yields a list. ``mu`` defaults to the generator measure."""
    out = {}
    specs = dict(specs or {})
    specs.setdefault("mu", {"type": "generator"})
    for name, spec in specs.items():
        w = f"{where}.{name}"
        if not isinstance(spec, dict):
            raise ConfigError(w, "expected an object")
        kind = _get(spec, "type", w, str)
        try:
            if kind == "generator":
                out[name] = generated
            elif kind == "uniform":
                out[name] = measures.uniform(cloud, spec.get("indices"))
            elif kind == "dirac":
                out[name] = measures.dirac(cloud, _index(spec, cloud, w))
            elif kind == "diracs":
                rng = stream(seed, f"measures/{name}")
                count = int(_get(spec, "count", w, int))
                idx = np.sort(rng.choice(len(cloud), size=min(count, len(cloud)), replace=False))
                out[name] = [measures.dirac(cloud, int(i)) for i in idx]
            elif kind == "atoms":
                out[name] = measures.AtomicMeasure(cloud, _get(spec, "indices", w, list),
                                                   _get(spec, "weights", w, list))
            elif kind == "restrict":
                out[name] = measures.restrict(_ref(out, spec, "of", w), _get(spec, "indices", w, list))
            elif kind == "convex":
                terms = _get(spec, "terms", w, list)
                out[name] = measures.convex_combine(
                    [(float(t), _ref(out, {"of": ref}, "of", f"{w}.terms")) for t, ref in terms])
            else:
                raise ConfigError(f"{w}.type", f"unknown measure {kind!r}")
        except (StructuralError, PreconditionError, TypeError, ValueError) as exc:
            raise ConfigError(w, str(exc)) from None
    return out


def _ref(table, spec, key, where):
    name = _get(spec, key, where, str)
    if name not in table:
        raise ConfigError(f"{where}.{key}", f"unknown measure {name!r} (declare it earlier)")
    mu = table[name]
    if isinstance(mu, list):
        raise ConfigError(f"{where}.{key}", f"{name!r} is a family, not a single measure")
    return mu


@dataclass
class Experiment:
    name: str
    operation: str
    seed: int
    space: object
    map: object
    cloud: object
    measures: dict
    grids: dict
    params: dict
    tolerances: dict
    out_dir: Path
    raw: dict = field(default_factory=dict)

    def measure(self, key="measure", default="mu"):
        name = self.params.get(key, default)
        mu = self.measures.get(name)
        if mu is None or isinstance(mu, list):
            raise ConfigError(f"params.{key}", f"{name!r} is not a declared single measure")
        return mu

    def family(self):
        names = self.params.get("family", list(self.measures))
        out = []
        for name in names:
            if name not in self.measures:
                raise ConfigError("params.family", f"unknown measure {name!r}")
            mu = self.measures[name]
            out.extend(mu if isinstance(mu, list) else [mu])
        return out

    def grid(self, key):
        if key not in self.grids:
            raise ConfigError(f"grids.{key}", f"operation {self.operation} needs this grid")
        return self.grids[key]


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None


def build(raw, seed=None, out=None, base=None):
    """Parse and validate one config dict into an Experiment."""
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a JSON object")
    raw = copy.deepcopy(raw)
    op = _get(raw, "operation", "", str)
    if op not in OPERATIONS:
        raise ConfigError("operation", f"unknown operation {op!r}; expected one of {', '.join(OPERATIONS)}")
    seed = int(raw.get("seed", 0) if seed is None else seed)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    base = Path(base) if base is not None else Path(".")
    space = build_space(_get(raw, "space", "", dict))
    cloud_spec = dict(_get(raw, "cloud", "", dict))
    if "path" in cloud_spec:
        cloud_spec["path"] = str(base / cloud_spec["path"])
    cloud, generated = build_cloud(cloud_spec, space, seed)
    map_ = build_map(raw["map"], space, cloud) if "map" in raw else None
    table = build_measures(raw.get("measures"), cloud, generated, seed)
    grids = {}
    for key, spec in dict(raw.get("grids", {})).items():
        if key == "n":
            grids[key] = [int(v) for v in expand_grid(spec, "grids.n")]
        else:
            grids[key] = expand_grid(spec, f"grids.{key}")
    output = raw.get("output", {})
    name = str(raw.get("name", output.get("name", op)))
    out_dir = Path(out) if out is not None else base / output.get("dir", "out")
    exp = Experiment(name, op, seed, space, map_, cloud, table, grids, dict(raw.get("params", {})),
                     dict(raw.get("tolerances", {})), out_dir, raw)
    validate(exp)
    return exp


def _pre(where, check):
    try:
        return check()
    except PreconditionError as exc:
        raise PreconditionError(f"{where}: {exc}") from None


def _need_map(exp):
    if exp.map is None:
        raise ConfigError("map", f"operation {exp.operation} needs a map")
    return exp.map


def _check_gammas(exp, mu, key="gamma"):
    for g in exp.grid(key):
        if g < 2 * exp.cloud.resolution:
            raise PreconditionError(
                f"grids.{key}: gamma={g:g} is below the scale floor {2 * exp.cloud.resolution:g} (2 x resolution)")
    delta = float(exp.params.get("delta", 0.02))
    if delta < mass_floor(mu):
        raise PreconditionError(f"params.delta: {delta:g} is below the mass floor {mass_floor(mu):g} (largest atom)")


def _check_betas(exp, mu):
    floor = SCALE_FLOOR_FACTOR * exp.cloud.resolution
    betas = exp.grid("beta")
    if sum(b >= floor for b in betas) < 3:
        raise PreconditionError(f"grids.beta: insufficient scale range above the scale floor {floor:g}")
    deltas = exp.grid("delta")
    if min(deltas) < mass_floor(mu):
        raise PreconditionError(f"grids.delta: {min(deltas):g} is below the mass floor {mass_floor(mu):g} (largest atom)")


def validate(exp):
    """Reject every detectable precondition violation before any computation."""
    op = exp.operation
    floor_factor = float(exp.params.get("floor_factor", FLOOR_FACTOR))
    if op in ("exponent-map", "exponent-measure", "verify-A", "verify-B", "verify-C", "verify-laws"):
        _need_map(exp)
        _pre("grids.eps", lambda: check_eps_grid(exp.cloud, exp.grid("eps"), floor_factor))
    if op in ("exponent-measure", "capacity", "entropy", "verify-B", "verify-C", "block-entropy"):
        mu = exp.measure()
    if op in ("capacity", "verify-C"):
        _check_betas(exp, mu)
    if op in ("entropy", "verify-C"):
        _need_map(exp)
        _check_gammas(exp, mu)
        if not exp.grid("n") or min(exp.grid("n")) < 1:
            raise PreconditionError("grids.n: need n values >= 1")
    if op == "block-entropy":
        if not isinstance(exp.space, SymbolSpace):
            raise ConfigError("space", "block entropy needs a symbol space")
        if max(exp.grid("n")) > exp.space.L or min(exp.grid("n")) < 1:
            raise PreconditionError(f"grids.n: block lengths must lie in [1, {exp.space.L}]")
    if op == "verify-A" and len(exp.family()) < 1:
        raise ConfigError("params.family", "empty measure family")
    if op == "verify-B":
        for key in ("n_max", "x_sample_count"):
            if int(exp.params.get(key, 1)) < 1:
                raise PreconditionError(f"params.{key}: must be >= 1")
    if op == "verify-C" and not exp.map.continuous:
        raise PreconditionError("map: Theorem C needs a continuous map")
    if op == "verify-laws":
        t = float(exp.params.get("t", 0.5))
        if not 0 < t < 1:
            raise PreconditionError("params.t: convex law needs 0 < t < 1")
        exp.measure("mu"), exp.measure("nu", default="mu")
    if op == "contraction-chain":
        _need_map(exp)
        k = float(_get(exp.params, "k", "params"))
        eps = float(_get(exp.params, "eps", "params"))
        gamma = float(_get(exp.params, "gamma", "params"))
        if not (k > 1 and eps > 0):
            raise PreconditionError("params.k: certificate needs k > 1 and eps > 0")
        if not 0 < gamma < eps:
            raise PreconditionError(f"params.gamma: contraction chain needs 0 < gamma < eps = {eps:g}")
        if not exp.grid("n") or min(exp.grid("n")) < 1:
            raise PreconditionError("grids.n: need n values >= 1")
    return exp


def expand_batch(raw, base):
    """List of configs from a batch file: a list, {"configs": [...]}, or {"base": ..., "sweep": {...}}.

    List entries may be config objects or paths relative to the batch file.
    A sweep maps dotted config paths to value lists; their product is taken.
    """
    if isinstance(raw, dict) and "sweep" in raw:
        template = _get(raw, "base", "", dict)
        sweep = _get(raw, "sweep", "", dict)
        keys = list(sweep)
        out = []
        for combo in itertools.product(*(sweep[k] for k in keys)):
            cfg = copy.deepcopy(template)
            for key, value in zip(keys, combo):
                _set_dotted(cfg, key, value)
            cfg["name"] = f"{template.get('name', template.get('operation', 'run'))}-" + "-".join(
                f"{k.split('.')[-1]}={v}" for k, v in zip(keys, combo))
            out.append(cfg)
        return out
    items = raw.get("configs") if isinstance(raw, dict) else raw
    if not isinstance(items, list):
        raise ConfigError("", "batch file must be a list, {configs: [...]}, or {base, sweep}")
    out = []
    for i, item in enumerate(items):
        if isinstance(item, str):
            item = load(base / item)
        if not isinstance(item, dict):
            raise ConfigError(f"configs[{i}]", "expected a config object or a path")
        out.append(item)
    return out


def _set_dotted(cfg, key, value):
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value

