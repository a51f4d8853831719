"""
Scenario configuration files (TOML) and their validation.

Units live in the key names (``length_cm``, ``alpha_cm2``, ``pump_nm``) and
are converted to SI by the accessor methods. Unknown keys are rejected by
name, with the line they appear on when the source text is available.
"""

from __future__ import annotations

import re
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .propagation import FLAT, FilterSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OPTIMIZE = "optimize"
RUN_ARTIFACTS = ("spectrum", "g2_before", "g2_after", "plot")
SCAN_KINDS = {
    # kind -> unit suffix of start/stop
    "fiber_length": "m",
    "crystal_length": "cm",
    "chirp": "cm2",
}
SPAN_POLICIES = ("auto",)


@dataclass(frozen=True)
class FigureConfig:
    id: str = ""
    description: str = ""


@dataclass(frozen=True)
class CrystalConfig:
    length_cm: float
    alpha_cm2: float
    pump_nm: float = 458.0
    degenerate_nm: float = 916.0

    def __post_init__(self):
        if not self.length_cm > 0:
            raise ConfigError(f"crystal.length_cm must be positive, got {self.length_cm}")
        if self.alpha_cm2 == 0:
            raise ConfigError("crystal.alpha_cm2 must be nonzero (the model needs a chirped grating)")
        if not 0 < self.pump_nm < self.degenerate_nm:
            raise ConfigError("crystal.pump_nm must be positive and below crystal.degenerate_nm")

    @property
    def length(self) -> float:
        return self.length_cm * 1e-2

    @property
    def alpha(self) -> float:
        return self.alpha_cm2 * 1e4


@dataclass(frozen=True)
class FiberConfig:
    material: str | None = None  # model name; None uses the materials file default
    length_signal_m: float | str = 0.0  # or "optimize"
    length_idler_m: float = 0.0
    range_m: tuple[float, float] | None = None  # search interval when optimizing
    n_steps: int = 41

    def __post_init__(self):
        if isinstance(self.length_signal_m, str):
            if self.length_signal_m != OPTIMIZE:
                raise ConfigError(
                    f"fiber.length_signal_m must be a number or {OPTIMIZE!r}, "
                    f"got {self.length_signal_m!r}")
            if self.length_idler_m:
                raise ConfigError("fiber.length_idler_m must be 0 when optimizing the signal arm")
        elif self.length_signal_m < 0:
            raise ConfigError("fiber.length_signal_m must be >= 0")
        if self.length_idler_m < 0:
            raise ConfigError("fiber.length_idler_m must be >= 0")
        if self.range_m is not None:
            lo, hi = (float(v) for v in self.range_m)
            if not 0 <= lo < hi:
                raise ConfigError(f"fiber.range_m must be an increasing pair >= 0, got {self.range_m}")
            object.__setattr__(self, "range_m", (lo, hi))
        if self.n_steps < 3:
            raise ConfigError(f"fiber.n_steps must be >= 3, got {self.n_steps}")

    @property
    def optimize(self) -> bool:
        return self.length_signal_m == OPTIMIZE


@dataclass(frozen=True)
class FilterConfig:
    kind: str = "flat"
    center_nm: float | None = None
    width_nm: float | None = None

    def __post_init__(self):
        if self.kind == "flat":
            if self.center_nm is not None or self.width_nm is not None:
                raise ConfigError("flat filter takes no center_nm/width_nm")
        elif self.kind == "gaussian":
            if self.center_nm is None or self.width_nm is None:
                raise ConfigError("gaussian filter needs center_nm and width_nm")
            if not (self.center_nm > 0 and self.width_nm > 0):
                raise ConfigError("gaussian filter center_nm and width_nm must be positive")
        else:
            raise ConfigError(f"filter kind must be 'flat' or 'gaussian', got {self.kind!r}")

    def to_spec(self) -> FilterSpec:
        if self.kind == "flat":
            return FLAT
        return FilterSpec.gaussian_nm(self.center_nm, self.width_nm)


@dataclass(frozen=True)
class GridConfig:
    n_points: int = 65536
    span_policy: str = "auto"

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ConfigError(f"grid.n_points must be a power of two, got {n}")
        if self.span_policy not in SPAN_POLICIES:
            raise ConfigError(f"grid.span_policy must be one of {SPAN_POLICIES}, got {self.span_policy!r}")


@dataclass(frozen=True)
class OutputsConfig:
    directory: str = "out"
    artifacts: tuple[str, ...] = RUN_ARTIFACTS

    def __post_init__(self):
        arts = tuple(self.artifacts)
        bad = [a for a in arts if a not in RUN_ARTIFACTS]
        if bad:
            raise ConfigError(f"outputs.artifacts: unknown artifact(s) {bad}; choose from {RUN_ARTIFACTS}")
        object.__setattr__(self, "artifacts", arts)


@dataclass(frozen=True)
class ScanConfig:
    kind: str
    start: float
    stop: float
    n_steps: int = 41
    with_compression: bool = True  # chirp scans only

    def __post_init__(self):
        if self.kind not in SCAN_KINDS:
            raise ConfigError(f"scan.kind must be one of {sorted(SCAN_KINDS)}, got {self.kind!r}")
        minimum = 3 if self.kind == "fiber_length" else 2
        if self.n_steps < minimum:
            raise ConfigError(f"scan.n_steps must be >= {minimum} for a {self.kind} scan, got {self.n_steps}")
        if not self.start < self.stop:
            raise ConfigError(f"scan start must be below stop, got {self.start} .. {self.stop}")
        if self.kind == "fiber_length" and self.start < 0:
            raise ConfigError("fiber-length scan must start at >= 0 m")
        if self.kind == "crystal_length" and self.start <= 0:
            raise ConfigError("crystal-length scan must start above 0 cm")
        if self.kind == "chirp" and self.start <= 0:
            raise ConfigError("chirp scan takes |alpha| magnitudes and must start above 0")

    @property
    def unit(self) -> str:
        return SCAN_KINDS[self.kind]

    def to_dict(self) -> dict:
        d = {"kind": self.kind, f"start_{self.unit}": self.start,
             f"stop_{self.unit}": self.stop, "n_steps": self.n_steps}
        if self.kind == "chirp":
            d["with_compression"] = self.with_compression
        return d


@dataclass(frozen=True)
class ScenarioConfig:
    crystal: CrystalConfig
    fiber: FiberConfig = field(default_factory=FiberConfig)
    signal_filter: FilterConfig = field(default_factory=FilterConfig)
    idler_filter: FilterConfig = field(default_factory=FilterConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    outputs: OutputsConfig = field(default_factory=OutputsConfig)
    figure: FigureConfig = field(default_factory=FigureConfig)
    scan: ScanConfig | None = None

    def filters(self) -> tuple[FilterSpec, FilterSpec]:
        return self.signal_filter.to_spec(), self.idler_filter.to_spec()

    def to_dict(self) -> dict:
        """Nested dict in the file layout; ``from_dict(to_dict(c)) == c``."""
        d = {
            "figure": asdict(self.figure),
            "crystal": asdict(self.crystal),
            "fiber": _drop_none(asdict(self.fiber)),
            "filters": {"signal": _drop_none(asdict(self.signal_filter)),
                        "idler": _drop_none(asdict(self.idler_filter))},
            "grid": asdict(self.grid),
            "outputs": {"directory": self.outputs.directory,
                        "artifacts": list(self.outputs.artifacts)},
        }
        if "range_m" in d["fiber"]:
            d["fiber"]["range_m"] = list(d["fiber"]["range_m"])
        if self.scan is not None:
            d["scan"] = self.scan.to_dict()
        return d

    @classmethod
    def from_dict(cls, doc: dict, source_text: str | None = None) -> "ScenarioConfig":
        return _parse(doc, source_text)


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def _locate(key: str, text: str | None) -> str:
    if not text:
        return ""
    leaf = key.rsplit(".", 1)[-1]
    pat = re.compile(rf"^\s*(\[+\s*{re.escape(key)}\s*\]+|{re.escape(leaf)}\s*=)")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return f" (line {i})"
    return ""


def _table(doc: dict, name: str, allowed: set[str], text, required: bool = False,
           where: str | None = None) -> dict:
    # ``where`` is the dotted path used in messages, for nested tables
    where = where or name
    if name not in doc:
        if required:
            raise ConfigError(f"missing required table [{where}]")
        return {}
    tab = doc[name]
    if not isinstance(tab, dict):
        raise ConfigError(f"'{where}' must be a table{_locate(where, text)}")
    for key in tab:
        if key not in allowed:
            raise ConfigError(f"unknown key '{where}.{key}'{_locate(f'{where}.{key}', text)}; "
                              f"expected one of {sorted(allowed)}")
    return tab


def _number(tab: dict, key: str, where: str, text, integer: bool = False):
    v = tab[key]
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"'{where}.{key}' must be {kind}, got {v!r}{_locate(f'{where}.{key}', text)}")
    return v if integer else float(v)


def _build(cls, tab: dict, where: str, text, numbers=(), integers=(), strings=(), **extra):
    kw = {}
    for key in tab:
        if key in numbers:
            kw[key] = _number(tab, key, where, text)
        elif key in integers:
            kw[key] = _number(tab, key, where, text, integer=True)
        elif key in strings:
            if not isinstance(tab[key], str):
                raise ConfigError(f"'{where}.{key}' must be a string{_locate(f'{where}.{key}', text)}")
            kw[key] = tab[key]
    kw.update(extra)
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"[{where}]: {exc}") from None
    except ConfigError as exc:
        raise ConfigError(f"[{where}]{_locate(where, text)}: {exc}") from None


def _parse(doc: dict, text) -> ScenarioConfig:
    top = {"figure", "crystal", "fiber", "filters", "grid", "outputs", "scan"}
    for key in doc:
        if key not in top:
            raise ConfigError(f"unknown key '{key}'{_locate(key, text)}; expected one of {sorted(top)}")

    fig = _build(FigureConfig, _table(doc, "figure", {"id", "description"}, text), "figure", text,
                 strings=("id", "description"))

    crystal_keys = {"length_cm", "alpha_cm2", "pump_nm", "degenerate_nm"}
    tab = _table(doc, "crystal", crystal_keys, text, required=True)
    for key in ("length_cm", "alpha_cm2"):
        if key not in tab:
            raise ConfigError(f"missing required key 'crystal.{key}'")
    crystal = _build(CrystalConfig, tab, "crystal", text, numbers=crystal_keys)

    tab = _table(doc, "fiber", {"material", "length_signal_m", "length_idler_m", "range_m", "n_steps"}, text)
    extra = {}
    if "length_signal_m" in tab:
        v = tab["length_signal_m"]
        extra["length_signal_m"] = v if isinstance(v, str) else _number(tab, "length_signal_m", "fiber", text)
    if "range_m" in tab:
        r = tab["range_m"]
        if not (isinstance(r, list) and len(r) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in r)):
            raise ConfigError(f"'fiber.range_m' must be a pair of numbers{_locate('fiber.range_m', text)}")
        extra["range_m"] = (float(r[0]), float(r[1]))
    fiber = _build(FiberConfig, tab, "fiber", text, numbers=("length_idler_m",),
                   integers=("n_steps",), strings=("material",), **extra)

    filters = _table(doc, "filters", {"signal", "idler"}, text)
    filt = {}
    for arm in ("signal", "idler"):
        sub = _table(filters, arm, {"kind", "center_nm", "width_nm"}, text, where=f"filters.{arm}")
        filt[arm] = _build(FilterConfig, sub, f"filters.{arm}", text,
                           numbers=("center_nm", "width_nm"), strings=("kind",))

    grid = _build(GridConfig, _table(doc, "grid", {"n_points", "span_policy"}, text), "grid", text,
                  integers=("n_points",), strings=("span_policy",))

    tab = _table(doc, "outputs", {"directory", "artifacts"}, text)
    extra = {}
    if "artifacts" in tab:
        arts = tab["artifacts"]
        if not (isinstance(arts, list) and all(isinstance(a, str) for a in arts)):
            raise ConfigError(f"'outputs.artifacts' must be a list of strings{_locate('outputs.artifacts', text)}")
        extra["artifacts"] = tuple(arts)
    outputs = _build(OutputsConfig, tab, "outputs", text, strings=("directory",), **extra)

    scan = None
    if "scan" in doc:
        raw = doc["scan"]
        kind = raw.get("kind") if isinstance(raw, dict) else None
        if kind not in SCAN_KINDS:
            raise ConfigError(f"scan.kind must be one of {sorted(SCAN_KINDS)}, got {kind!r}"
                              f"{_locate('scan.kind', text)}")
        unit = SCAN_KINDS[kind]
        allowed = {"kind", f"start_{unit}", f"stop_{unit}", "n_steps"}
        if kind == "chirp":
            allowed.add("with_compression")
        tab = _table(doc, "scan", allowed, text)
        for key in (f"start_{unit}", f"stop_{unit}", "n_steps"):
            if key not in tab:
                raise ConfigError(f"missing required key 'scan.{key}'")
        extra = {"kind": kind,
                 "start": _number(tab, f"start_{unit}", "scan", text),
                 "stop": _number(tab, f"stop_{unit}", "scan", text),
                 "n_steps": _number(tab, "n_steps", "scan", text, integer=True)}
        if "with_compression" in tab:
            if not isinstance(tab["with_compression"], bool):
                raise ConfigError("'scan.with_compression' must be true or false")
            extra["with_compression"] = tab["with_compression"]
        scan = _build(ScanConfig, {}, "scan", text, **extra)

    return ScenarioConfig(crystal, fiber, filt["signal"], filt["idler"], grid, outputs, fig, scan)


def parse_config(text: str, origin: str = "<config>") -> ScenarioConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    try:
        return _parse(doc, text)
    except ConfigError as exc:
        raise ConfigError(f"{origin}: {exc}") from None


def bundled_figures() -> dict[str, Path]:
    root = resources.files("biphoton") / "figures"
    out = {}
    for entry in root.iterdir():
        if entry.name.endswith(".toml"):
            out[entry.name[:-5]] = Path(str(entry))
    return dict(sorted(out.items(), key=lambda kv: int(re.sub(r"\D", "", kv[0]) or 0)))


def resolve_config_path(name: str) -> Path:
    """A file path, or the id of a bundled figure config (``fig4``)."""
    path = Path(name)
    if path.exists():
        return path
    figures = bundled_figures()
    if name in figures:
        return figures[name]
    raise ConfigError(f"config not found: {name} (not a file, not a bundled figure id)")


def load_config(name: str) -> ScenarioConfig:
    path = resolve_config_path(name)
    return parse_config(path.read_text(encoding="utf-8"), str(path))
