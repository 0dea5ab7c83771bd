"""Named configurations, deep holes, preset strings and JSON interchange.

Preset grammar (``@rho`` rescales to density ``rho``)::

    square | hexagonal | honeycomb                 unit density by default
    rect:a                                         diag(1, a) Z^2
    union2:[base:]x1,x2                            base + (base + B x)
    union3:[base:]x1,x2;y1,y2                      three translates of base
    cuboid:b1,...,bd                               diag(b) Z^d
    tensor:<delta|s1,s2,...>x<delta|...>           product of 1-d configurations

``base`` is ``square`` (default), ``hexagonal`` or ``rect=a``. Shift
coordinates are basis coordinates and may be exact rationals such as
``1/3``; they are parsed as fractions and rounded to binary once.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .exceptions import DomainError, ParseError, ValidationError
from .geometry import (
    Lattice,
    PeriodicConfig,
    congruent,
    lagrange_reduce,
    normalize_to_density,
)

HEX_UNIT_BASIS = math.sqrt(2 / math.sqrt(3)) * np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]])
GAMMA_X0_BASIS = math.sqrt(3) * np.array([[1 / 3, -1 / 3], [1 / 3, 2 / 3]])
PRESETS = ("square", "hexagonal", "honeycomb", "rect", "union2", "union3", "cuboid", "tensor")


def _check_density(density: float) -> float:
    density = float(density)
    if not density > 0:
        raise ValidationError(f"density must be positive, got {density!r}")
    return density


def hexagonal_lattice(density: float = 1.0) -> Lattice:
    """The hexagonal lattice with ``density`` points per unit area."""
    s = _check_density(density) ** -0.5
    return Lattice(HEX_UNIT_BASIS * s)


def hexagonal(density: float = 1.0) -> PeriodicConfig:
    return PeriodicConfig.from_lattice(hexagonal_lattice(density))


def square(density: float = 1.0) -> PeriodicConfig:
    return PeriodicConfig.from_lattice(Lattice(np.eye(2) * _check_density(density) ** -0.5))


def rectangular(a: float) -> PeriodicConfig:
    """``diag(1, a) Z^2``."""
    if not a > 0:
        raise ValidationError(f"rectangle side must be positive, got {a!r}")
    return PeriodicConfig.from_lattice(Lattice(np.diag([1.0, float(a)])))


def deep_holes(lattice: Lattice) -> np.ndarray:
    """The two deep holes of a hexagonal lattice, as Cartesian points in its fundamental cell."""
    if lattice.dimension != 2:
        raise DomainError("deep holes are provided for planar hexagonal lattices")
    ref = hexagonal_lattice(1.0 / lattice.covolume)
    if not congruent(lattice, ref):
        raise DomainError("lattice is not hexagonal")
    red = lagrange_reduce(lattice.basis)
    # a reduced hexagonal basis spans 60 degrees; holes sit at (m/3, m/3)
    holes = lattice.reduce(np.array([red @ np.array([m / 3, m / 3]) for m in (1, 2)]))
    frac = np.round(lattice.to_fractional(holes), 12)
    order = sorted(range(2), key=lambda i: tuple(frac[i]))
    return holes[order]


def honeycomb(density: float = 1.0) -> PeriodicConfig:
    """Hexagonal lattice together with its translate by a deep hole."""
    lat = hexagonal_lattice(_check_density(density) / 2)
    return PeriodicConfig(lat, np.vstack([np.zeros(2), deep_holes(lat)[0]]))


def union2(lattice: Lattice, x) -> PeriodicConfig:
    """``lattice`` together with its translate by ``B x`` (``x`` in basis coordinates)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return PeriodicConfig.from_fractional(lattice, [np.zeros(lattice.dimension), x])


def union3(lattice: Lattice, x, y) -> PeriodicConfig:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    return PeriodicConfig.from_fractional(lattice, [np.zeros(lattice.dimension), x, y])


def union3_square(x, y) -> PeriodicConfig:
    """``Z^2 u (Z^2 + x) u (Z^2 + y)``, density 3."""
    return union3(Lattice(np.eye(2)), x, y)


def gamma_x0_lattice() -> Lattice:
    """Unit-density lattice formed by ``Z^2`` and its translates by (1/3,1/3), (2/3,2/3)."""
    return Lattice(GAMMA_X0_BASIS)


def cuboid(beta) -> PeriodicConfig:
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if np.any(beta <= 0):
        raise ValidationError("cuboid side lengths must be positive")
    return PeriodicConfig.from_lattice(Lattice(np.diag(beta)))


def tensor(factors) -> PeriodicConfig:
    """Cartesian product of 1-d configurations."""
    from .energy import product_config

    return product_config(factors)


def periodic_1d(delta: float, shifts) -> PeriodicConfig:
    """``U_j delta (Z + s_j)``."""
    if not delta > 0:
        raise ValidationError(f"1-d period must be positive, got {delta!r}")
    s = np.asarray(shifts, dtype=float).reshape(-1, 1)
    return PeriodicConfig.from_fractional(Lattice([[float(delta)]]), s)


# --- preset strings --------------------------------------------------------


def _number(token: str, pos: int) -> Fraction:
    text = token.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        lead = len(token) - len(token.lstrip())
        raise ParseError(f"expected a number, got {text!r}", pos + lead) from None


def _numbers(text: str, pos: int, count: int | None = None) -> list[Fraction]:
    out, offset = [], 0
    for tok in text.split(","):
        out.append(_number(tok, pos + offset))
        offset += len(tok) + 1
    if count is not None and len(out) != count:
        raise ParseError(f"expected {count} numbers, got {len(out)}", pos)
    return out


def _floats(values) -> list[float]:
    return [float(v) for v in values]


def _base_lattice(token: str, pos: int) -> Lattice:
    t = token.strip()
    if t == "square":
        return Lattice(np.eye(2))
    if t == "hexagonal":
        return hexagonal_lattice()
    if t.startswith("rect="):
        return rectangular(float(_number(t[5:], pos + 5))).lattice
    raise ParseError(f"unknown base lattice {t!r}", pos)


def _split_base(params: str, pos: int) -> tuple[Lattice, str, int]:
    if ":" in params:
        base, rest = params.split(":", 1)
        return _base_lattice(base, pos), rest, pos + len(base) + 1
    return Lattice(np.eye(2)), params, pos


def _tensor_factor(text: str, pos: int) -> PeriodicConfig:
    body = text.strip()
    lead = len(text) - len(text.lstrip())
    if not (body.startswith("<") and body.endswith(">")):
        raise ParseError("tensor factors must look like <delta|s1,s2,...>", pos + lead)
    inner = body[1:-1]
    if "|" not in inner:
        raise ParseError("tensor factor needs 'delta|shifts'", pos + lead + 1)
    delta, shifts = inner.split("|", 1)
    d = _number(delta, pos + lead + 1)
    s = _numbers(shifts, pos + lead + 2 + len(delta))
    return periodic_1d(float(d), _floats(s))


def _split_factors(params: str) -> list[tuple[str, int]]:
    out, start, depth = [], 0, 0
    for i, ch in enumerate(params):
        if ch == "<":
            depth += 1
        elif ch == ">":
            depth -= 1
        elif depth == 0 and ch in "x×*":
            out.append((params[start:i], start))
            start = i + 1
    out.append((params[start:], start))
    return out


def parse_preset(text: str) -> PeriodicConfig:
    """Resolve a preset string such as ``hexagonal@1`` or ``union3:1/3,1/3;2/3,2/3``."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty configuration string", 0)
    rho = None
    body = text
    if "@" in text:
        at = text.rindex("@")
        body = text[:at]
        rho = float(_number(text[at + 1 :], at + 1))
        if rho <= 0:
            raise ParseError("density after '@' must be positive", at + 1)
    name, _, params = body.partition(":")
    pos = len(name) + 1
    name = name.strip()
    if name in ("square", "hexagonal", "honeycomb"):
        if params:
            raise ParseError(f"preset {name!r} takes no parameters", pos)
        cfg = {"square": square, "hexagonal": hexagonal, "honeycomb": honeycomb}[name]()
    elif name == "rect":
        (a,) = _numbers(params, pos, 1)
        cfg = rectangular(float(a))
    elif name == "union2":
        lat, rest, p = _split_base(params, pos)
        cfg = union2(lat, _floats(_numbers(rest, p, lat.dimension)))
    elif name == "union3":
        lat, rest, p = _split_base(params, pos)
        if ";" not in rest:
            raise ParseError("union3 needs two shifts separated by ';'", p)
        xs, ys = rest.split(";", 1)
        x = _numbers(xs, p, lat.dimension)
        y = _numbers(ys, p + len(xs) + 1, lat.dimension)
        cfg = union3(lat, _floats(x), _floats(y))
    elif name == "cuboid":
        cfg = cuboid(_floats(_numbers(params, pos)))
    elif name == "tensor":
        cfg = tensor([_tensor_factor(t, pos + off) for t, off in _split_factors(params)])
    else:
        raise ParseError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}", 0)
    if rho is not None:
        cfg = normalize_to_density(cfg, rho)
    return cfg


# --- JSON -------------------------------------------------------------------


def config_to_dict(config: PeriodicConfig, preset: str | None = None) -> dict:
    """JSON-ready description; ``basis`` lists the generator columns."""
    out = {
        "dimension": config.dimension,
        "basis": config.lattice.basis.T.tolist(),
        "shifts": config.shifts.tolist(),
        "shift_coords": "cartesian",
        "density": config.density,
    }
    if preset is not None:
        out["preset"] = preset
    return out


def config_to_json(config: PeriodicConfig, preset: str | None = None) -> str:
    return json.dumps(config_to_dict(config, preset))


def config_from_dict(data: dict) -> PeriodicConfig:
    """Inverse of :func:`config_to_dict`; a ``preset`` key alone is also accepted."""
    if not isinstance(data, dict):
        raise ParseError("configuration JSON must be an object", 0)
    if "basis" not in data:
        if "preset" in data:
            return parse_preset(data["preset"])
        raise ParseError("configuration JSON needs 'basis' or 'preset'", 0)
    try:
        cols = np.array(data["basis"], dtype=float)
        shifts = np.array(data.get("shifts", [[0.0] * len(cols)]), dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"non-numeric basis or shifts: {exc}", 0) from None
    if cols.ndim != 2 or cols.shape[0] != cols.shape[1]:
        raise ParseError(f"basis must be a square list of columns, got shape {cols.shape}", 0)
    if "dimension" in data and int(data["dimension"]) != cols.shape[0]:
        raise ValidationError("'dimension' does not match the basis size")
    lat = Lattice(cols.T)
    coords = data.get("shift_coords", "cartesian")
    if coords == "cartesian":
        return PeriodicConfig(lat, shifts)
    if coords == "lattice":
        return PeriodicConfig.from_fractional(lat, shifts)
    raise ParseError(f"shift_coords must be 'cartesian' or 'lattice', got {coords!r}", 0)


def config_from_json(text: str) -> PeriodicConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.pos) from None
    return config_from_dict(data)


def parse_config(text: str) -> PeriodicConfig:
    """A configuration from a JSON document or a preset string."""
    if isinstance(text, str) and text.lstrip().startswith("{"):
        return config_from_json(text)
    return parse_preset(text)
