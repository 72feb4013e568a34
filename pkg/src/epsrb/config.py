"""TOML run configuration for the elliptic testbed.

Example::

    n = 64
    eps = 0.1
    nu_box = [[0.0, 1.0], [0.0, 0.4]]

    [coefficient]
    preset = "affine_sine"        # a = 1 + nu1 + nu2 sin(pi x)
    alpha = 0.6

    [forcing]
    preset = "rough_smooth"       # f = (1 - nu1/2) rough + nu2 smooth

    [grid]
    n_nu = [4, 4]
    n_eta = 16
    eta_spacing = "log"
    n_validation = 50

    [greedy]
    delta = 1e-6
    safety_factor = 2.0
    tol_online = 1e-3
    projection = "residual"

Instead of a preset, ``[coefficient]`` may give ``base`` and ``terms`` as
inline tables with ``poly`` / ``sin`` coefficient lists, and ``[forcing]``
may give ``base`` / ``terms`` as tables of profile weights.
"""

import sys
from dataclasses import dataclass, field

from .elliptic import AffineForcing, AffineFunction, CoefficientField, EllipticFamily
from .exceptions import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "load_config", "parse_config", "DEFAULT_CONFIG"]

DEFAULT_CONFIG = {
    "n": 64,
    "eps": 0.1,
    "nu_box": [[0.0, 1.0], [0.0, 0.4]],
    "coefficient": {"preset": "affine_sine", "alpha": 0.6},
    "forcing": {"preset": "rough_smooth"},
    "grid": {"n_nu": [4, 4], "n_eta": 16, "eta_spacing": "log", "n_validation": 50},
    "greedy": {"delta": 1e-6, "safety_factor": 2.0, "tol_online": 1e-3, "projection": "residual"},
}

_TOP_KEYS = {"n", "eps", "nu_box", "coefficient", "forcing", "grid", "greedy"}


@dataclass
class RunConfig:
    n: int
    eps: float
    nu_box: list
    coefficient: dict
    forcing: dict
    n_nu: list
    n_eta: int
    eta_spacing: str = "log"
    n_validation: int = 50
    delta: float = 1e-6
    safety_factor: float = 2.0
    tol_online: float = 1e-3
    projection: str = "residual"
    source: str = field(default="<default>")

    def build_family(self, eps=None):
        return EllipticFamily(
            self.n, _coefficient(self.coefficient), _forcing(self.forcing),
            self.nu_box, self.eps if eps is None else eps,
        )


def _coefficient(spec):
    spec = dict(spec)
    alpha = spec.pop("alpha", 0.6)
    a_plus = spec.pop("a_plus", float("inf"))
    preset = spec.pop("preset", None)
    if preset is not None:
        if spec:
            raise ConfigError(f"coefficient preset cannot be combined with {sorted(spec)}")
        if preset != "affine_sine":
            raise ConfigError(f"unknown coefficient preset {preset!r}")
        field_ = CoefficientField.affine_sine(alpha)
        field_.a_plus = float(a_plus)
        return field_
    try:
        base = AffineFunction.from_spec(spec.pop("base"))
        terms = [AffineFunction.from_spec(t) for t in spec.pop("terms")]
    except KeyError as exc:
        raise ConfigError(f"coefficient needs a preset or base/terms (missing {exc})")
    if spec:
        raise ConfigError(f"unknown coefficient keys {sorted(spec)}")
    return CoefficientField(base, terms, alpha, a_plus)


def _forcing(spec):
    spec = dict(spec)
    preset = spec.pop("preset", None)
    if preset is not None:
        if spec:
            raise ConfigError(f"forcing preset cannot be combined with {sorted(spec)}")
        if preset != "rough_smooth":
            raise ConfigError(f"unknown forcing preset {preset!r}")
        return AffineForcing.rough_smooth()
    try:
        return AffineForcing(spec.pop("base"), spec.pop("terms"))
    except KeyError as exc:
        raise ConfigError(f"forcing needs a preset or base/terms (missing {exc})")


def _positive(name, value, allow_zero=False):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if not (value > 0 or (allow_zero and value == 0)):
        raise ConfigError(f"{name} must be positive, got {value!r}")
    return value


def parse_config(data, source="<dict>"):
    """Validate a configuration mapping (as read from TOML)."""
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    merged = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULT_CONFIG.items()}
    for key, value in data.items():
        if key in ("grid", "greedy"):
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            bad = set(value) - set(DEFAULT_CONFIG[key])
            if bad:
                raise ConfigError(f"unknown [{key}] keys {sorted(bad)}")
            merged[key].update(value)
        else:
            merged[key] = value

    n = merged["n"]
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n!r}")
    box = merged["nu_box"]
    if (not isinstance(box, list) or not box
            or any(not isinstance(r, list) or len(r) != 2 for r in box)):
        raise ConfigError("nu_box must be a list of [low, high] pairs")
    if any(float(lo) > float(hi) for lo, hi in box):
        raise ConfigError("nu_box rows must satisfy low <= high")
    grid, greedy = merged["grid"], merged["greedy"]
    n_nu = grid["n_nu"]
    n_nu = [n_nu] * len(box) if isinstance(n_nu, int) else list(n_nu)
    if len(n_nu) != len(box) or any(not isinstance(c, int) or c < 1 for c in n_nu):
        raise ConfigError("grid.n_nu must be a positive integer or one per parameter")
    if not isinstance(grid["n_eta"], int) or grid["n_eta"] < 1:
        raise ConfigError("grid.n_eta must be a positive integer")
    if grid["eta_spacing"] not in ("log", "uniform"):
        raise ConfigError("grid.eta_spacing must be 'log' or 'uniform'")
    if not isinstance(grid["n_validation"], int) or grid["n_validation"] < 0:
        raise ConfigError("grid.n_validation must be a nonnegative integer")
    if greedy["projection"] not in ("residual", "galerkin"):
        raise ConfigError("greedy.projection must be 'residual' or 'galerkin'")
    if not isinstance(merged["coefficient"], dict) or not isinstance(merged["forcing"], dict):
        raise ConfigError("[coefficient] and [forcing] must be tables")

    cfg = RunConfig(
        n=n,
        eps=_positive("eps", merged["eps"]),
        nu_box=[[float(lo), float(hi)] for lo, hi in box],
        coefficient=merged["coefficient"],
        forcing=merged["forcing"],
        n_nu=n_nu,
        n_eta=grid["n_eta"],
        eta_spacing=grid["eta_spacing"],
        n_validation=grid["n_validation"],
        delta=_positive("greedy.delta", greedy["delta"], allow_zero=True),
        safety_factor=_positive("greedy.safety_factor", greedy["safety_factor"]),
        tol_online=_positive("greedy.tol_online", greedy["tol_online"]),
        projection=greedy["projection"],
        source=source,
    )
    # surface coefficient/forcing errors at parse time
    cfg.build_family()
    return cfg


def load_config(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")
    return parse_config(data, source=str(path))
