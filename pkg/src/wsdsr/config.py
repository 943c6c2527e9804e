"""Parameter sets and the ``key=value`` override format."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from wsdsr.errors import InvalidInputError

# Per-pixel mean squared distance limits on the 0..255 scale.
HT_MATCH_THRESHOLD = 3000.0
WIENER_MATCH_THRESHOLD = 400.0

WIENER_2D_CHOICES = ("identity", "dct")
# "group": HT threshold tau * sqrt(group size); "tau": plain tau.
HT_THRESHOLD_CHOICES = ("group", "tau")


def is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class StageParams:
    n1: int
    n2: int = 32
    ns0: int = 12
    ns_max: int = 12
    n_step: int | None = None  # None: n1 - 1
    match_threshold: float = HT_MATCH_THRESHOLD

    def __post_init__(self):
        if self.n_step is None:
            object.__setattr__(self, "n_step", self.n1 - 1)
        self.validate()

    def validate(self, prefix: str = "") -> None:
        def bad(key, msg):
            raise InvalidInputError(f"{key}{prefix}: {msg}")

        if self.n1 < 1:
            bad("n1", f"patch side must be >= 1, got {self.n1}")
        if not 1 <= self.n_step <= self.n1:
            bad("n_step", f"must lie in [1, n1={self.n1}], got {self.n_step}")
        if self.ns0 < 0:
            bad("ns0", f"must be >= 0, got {self.ns0}")
        if self.ns0 > self.ns_max:
            bad("ns_max", f"must be >= ns0={self.ns0}, got {self.ns_max}")
        if not is_pow2(self.n2):
            bad("n2", f"must be a power of two, got {self.n2}")
        if not self.match_threshold >= 0:
            bad("match_threshold", f"must be >= 0, got {self.match_threshold}")


@dataclass(frozen=True)
class GlobalParams:
    alpha: float = 1.75
    gamma_k: float = 12.0
    gamma_s: float = 2.0 / 3.0
    beta0: float = 20.0
    beta1: float = 20.0
    k_pilot: int = 5
    k_max: int = 400

    def validate(self) -> None:
        if not self.alpha > 0:
            raise InvalidInputError(f"alpha: must be > 0, got {self.alpha}")
        if self.k_max < 1:
            raise InvalidInputError(f"k_max: must be >= 1, got {self.k_max}")
        if self.k_pilot < 1:
            raise InvalidInputError(f"k_pilot: must be >= 1, got {self.k_pilot}")


@dataclass(frozen=True)
class ParamSet:
    scale: float
    ht: StageParams
    wiener: StageParams
    glob: GlobalParams = field(default_factory=GlobalParams)
    wiener_2d: str = "identity"
    ht_threshold: str = "group"
    reuse: bool = True
    derived: bool = True

    def validate(self) -> None:
        self.ht.validate("_ht")
        self.wiener.validate("_wiener")
        self.glob.validate()
        if self.wiener_2d not in WIENER_2D_CHOICES:
            raise InvalidInputError(
                f"wiener_2d: expected one of {WIENER_2D_CHOICES}, got {self.wiener_2d!r}"
            )
        if self.ht_threshold not in HT_THRESHOLD_CHOICES:
            raise InvalidInputError(
                f"ht_threshold: expected one of {HT_THRESHOLD_CHOICES}, got {self.ht_threshold!r}"
            )

    def replace(self, **kw) -> "ParamSet":
        """Copy with top-level or flattened ``<field>_ht``/``<field>_wiener`` keys replaced."""
        return apply_overrides(self, kw)


def ht_block_size(s: float) -> int:
    return max(8, int(math.floor(4.0 * (s - 1.0) + 0.5)))


def wiener_block_size(n1_ht: int) -> int:
    """Half the HT block size, rounded to the nearest even integer, at least 4."""
    return max(4, 2 * int(math.floor(n1_ht / 4.0 + 0.5)))


def defaults(s: float) -> ParamSet:
    if not s > 1:
        raise InvalidInputError(f"scale must be > 1, got {s}")
    n1 = ht_block_size(s)
    n1w = wiener_block_size(n1)
    ps = ParamSet(
        scale=float(s),
        ht=StageParams(n1=n1, n2=32, ns0=12, ns_max=12, n_step=n1 - 1,
                       match_threshold=HT_MATCH_THRESHOLD),
        wiener=StageParams(n1=n1w, n2=32, ns0=12, ns_max=48, n_step=n1w - 1,
                           match_threshold=WIENER_MATCH_THRESHOLD),
        glob=GlobalParams(beta1=40.0 / math.sqrt(s)),
    )
    ps.validate()
    return ps


# --- key=value format --------------------------------------------------------

_STAGE_FIELDS = {f.name: f.type for f in dataclasses.fields(StageParams)}
_GLOBAL_FIELDS = {f.name: f.type for f in dataclasses.fields(GlobalParams)}
_DERIVED_KEYS = {"n1_ht", "n1_wiener", "n_step_ht", "n_step_wiener", "beta1"}


def _keys() -> list[str]:
    keys = []
    for stage in ("ht", "wiener"):
        keys += [f"{name}_{stage}" for name in _STAGE_FIELDS]
    keys += list(_GLOBAL_FIELDS)
    keys += ["wiener_2d", "ht_threshold", "reuse"]
    return keys


KNOWN_KEYS = tuple(_keys())


def _parse_value(key: str, raw, typ: str):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if typ == "int":
            return int(raw)
        if typ == "float":
            if "/" in raw:
                num, den = raw.split("/", 1)
                return float(num) / float(den)
            return float(raw)
        if typ == "bool":
            low = raw.lower()
            if low in ("1", "true", "on", "yes"):
                return True
            if low in ("0", "false", "off", "no"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise InvalidInputError(f"{key}: cannot parse {raw!r} as {typ}") from None
    return raw


def _stage(fields: dict, stage: str) -> StageParams:
    try:
        return StageParams(**fields)
    except InvalidInputError as exc:
        name, rest = str(exc).split(":", 1)
        raise InvalidInputError(f"{name}_{stage}:{rest}") from None


def apply_overrides(ps: ParamSet, overrides: dict) -> ParamSet:
    ht = dataclasses.asdict(ps.ht)
    wi = dataclasses.asdict(ps.wiener)
    gl = dataclasses.asdict(ps.glob)
    top = {"wiener_2d": ps.wiener_2d, "ht_threshold": ps.ht_threshold, "reuse": ps.reuse}
    derived = ps.derived
    for key, raw in overrides.items():
        if key in _GLOBAL_FIELDS:
            gl[key] = _parse_value(key, raw, _GLOBAL_FIELDS[key])
        elif key in ("wiener_2d", "ht_threshold"):
            top[key] = _parse_value(key, raw, "str")
        elif key == "reuse":
            top[key] = _parse_value(key, raw, "bool")
        else:
            name, _, stage = key.rpartition("_")
            if stage not in ("ht", "wiener") or name not in _STAGE_FIELDS:
                raise InvalidInputError(f"unknown config key {key!r}")
            target = ht if stage == "ht" else wi
            target[name] = _parse_value(key, raw, _STAGE_FIELDS[name].split(" ")[0])
            if name == "n1" and f"n_step_{stage}" not in overrides:
                target["n_step"] = None
        if key in _DERIVED_KEYS:
            derived = False
    out = ParamSet(
        scale=ps.scale,
        ht=_stage(ht, "ht"),
        wiener=_stage(wi, "wiener"),
        glob=GlobalParams(**gl),
        derived=derived,
        **top,
    )
    out.validate()
    return out


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise InvalidInputError(f"unknown config key {key!r} (line {lineno})")
        out[key] = value
    return out


def load_overrides(path: str | Path | None, s: float) -> ParamSet:
    ps = defaults(s)
    if path is None:
        return ps
    return apply_overrides(ps, parse_config(Path(path).read_text()))


def serialize(ps: ParamSet) -> str:
    """Every key with its effective value; ``repr`` keeps floats bit-exact."""
    lines = [f"# scale={ps.scale!r}"]
    for stage, sp in (("ht", ps.ht), ("wiener", ps.wiener)):
        for name in _STAGE_FIELDS:
            lines.append(f"{name}_{stage}={getattr(sp, name)!r}")
    for name in _GLOBAL_FIELDS:
        lines.append(f"{name}={getattr(ps.glob, name)!r}")
    lines.append(f"wiener_2d={ps.wiener_2d}")
    lines.append(f"ht_threshold={ps.ht_threshold}")
    lines.append(f"reuse={'on' if ps.reuse else 'off'}")
    return "\n".join(lines) + "\n"
