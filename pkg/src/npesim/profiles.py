"""Named analytic profiles for boundary traces and initial fields.

A profile is a ``+``-separated sum of terms ``kind:args``:

``const:v``
    the constant ``v``
``sine:a``
    on an edge, ``a*sin(pi*s/L)`` in the edge coordinate ``s``; as a field,
    ``a*sin(pi*x/Lx)*sin(pi*y/Ly)``
``sine2:a``
    squares of the sines above
``mode:a,m,n``
    fields only: ``a*sin(m*pi*x/Lx)*sin(n*pi*y/Ly)`` for integer ``m, n >= 1``
``linear:a,bx,by``
    ``a + bx*x + by*y`` (edges take its restriction)
``bump:a,x0,y0,w``
    Gaussian ``a*exp(-((x-x0)^2+(y-y0)^2)/w^2)`` (edges take its restriction)
``lift``
    fields only: the bilinear boundary lift of the species' trace

Example: ``const:1+sine:0.5``.
"""
import re

import numpy as np

from .errors import ValidationError
from .mesh import BoundaryTrace, coons_lift

_ARITY = {"const": 1, "sine": 1, "sine2": 1, "mode": 3, "linear": 3, "bump": 4, "lift": 0}
_SPLIT = re.compile(r"\+(?=\s*[A-Za-z])")


def parse_profile(text):
    """Parse profile text into a tuple of ``(kind, args)`` terms."""
    if not isinstance(text, str) or not text.strip():
        raise ValidationError(f"empty profile {text!r}")
    terms = []
    for raw in _SPLIT.split(text.strip()):
        raw = raw.strip()
        kind, _, rest = raw.partition(":")
        kind = kind.strip().lower()
        if kind not in _ARITY:
            raise ValidationError(f"unknown profile kind {kind!r} in {text!r}")
        try:
            args = tuple(float(a) for a in rest.split(",")) if rest.strip() else ()
        except ValueError:
            raise ValidationError(f"profile {raw!r} has non-numeric arguments") from None
        if len(args) != _ARITY[kind]:
            raise ValidationError(f"profile {kind!r} takes {_ARITY[kind]} argument(s), got {len(args)}")
        if not all(np.isfinite(args)):
            raise ValidationError(f"profile {raw!r} has non-finite arguments")
        if kind == "mode" and not all(a >= 1 and a == int(a) for a in args[1:]):
            raise ValidationError(f"mode numbers must be integers >= 1 in {raw!r}")
        if kind == "bump" and not args[3] > 0:
            raise ValidationError(f"bump width must be positive in {raw!r}")
        terms.append((kind, args))
    return tuple(terms)


def format_profile(terms):
    """Canonical text for parsed terms; ``parse_profile`` inverts it exactly."""
    parts = []
    for kind, args in terms:
        parts.append(kind if not args else kind + ":" + ",".join(repr(float(a)) for a in args))
    return "+".join(parts)


def canonical(text):
    return format_profile(parse_profile(text))


def _field_term(kind, args, X, Y, Lx, Ly):
    if kind == "const":
        return np.full_like(X, args[0])
    if kind == "sine":
        return args[0] * np.sin(np.pi * X / Lx) * np.sin(np.pi * Y / Ly)
    if kind == "sine2":
        return args[0] * np.sin(np.pi * X / Lx) ** 2 * np.sin(np.pi * Y / Ly) ** 2
    if kind == "mode":
        a, m, n = args
        return a * np.sin(m * np.pi * X / Lx) * np.sin(n * np.pi * Y / Ly)
    if kind == "linear":
        return args[0] + args[1] * X + args[2] * Y
    if kind == "bump":
        a, x0, y0, w = args
        return a * np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / w**2)
    raise ValidationError(f"profile kind {kind!r} is not a field profile")


def eval_field(text, grid, lift_trace=None):
    """Evaluate a field profile at the grid nodes."""
    X, Y = grid.XY
    out = np.zeros(grid.shape)
    for kind, args in parse_profile(text):
        if kind == "lift":
            if lift_trace is None:
                raise ValidationError("profile term 'lift' needs a boundary trace")
            out += coons_lift(grid, lift_trace)
        else:
            out += _field_term(kind, args, X, Y, grid.Lx, grid.Ly)
    return out


def _edge_term(kind, args, s, L, xs, ys, Lx, Ly):
    if kind == "const":
        return np.full_like(s, args[0])
    if kind == "sine":
        return args[0] * np.sin(np.pi * s / L)
    if kind == "sine2":
        return args[0] * np.sin(np.pi * s / L) ** 2
    if kind in ("linear", "bump"):
        return _field_term(kind, args, xs, ys, Lx, Ly)
    raise ValidationError(f"profile kind {kind!r} is not an edge profile")


def eval_edge(text, grid, edge):
    """Values of an edge profile along ``edge`` in {bottom, top, left, right}."""
    x, y = grid.x, grid.y
    if edge in ("bottom", "top"):
        s, L = x, grid.Lx
        xs, ys = x, np.full_like(x, 0.0 if edge == "bottom" else grid.Ly)
    elif edge in ("left", "right"):
        s, L = y, grid.Ly
        xs, ys = np.full_like(y, 0.0 if edge == "left" else grid.Lx), y
    else:
        raise ValidationError(f"unknown edge {edge!r}")
    out = np.zeros_like(s)
    for kind, args in parse_profile(text):
        out += _edge_term(kind, args, s, L, xs, ys, grid.Lx, grid.Ly)
    return out


EDGES = ("bottom", "top", "left", "right")


def trace_from_profiles(grid, edges):
    """BoundaryTrace from a mapping edge -> profile text."""
    return BoundaryTrace(*(eval_edge(edges[e], grid, e) for e in EDGES)).validate(grid)
