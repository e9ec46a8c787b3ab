"""Dirichlet heat kernel of a rectangle and checks of its Gaussian bound and smoothing rates.

The rectangle kernel factorises, ``H(x,t;y) = H1_x(x1,y1,t) * H1_y(x2,y2,t)``,
with the interval kernel

    H1(x, y, t) = (2/L) sum_k sin(k pi x/L) sin(k pi y/L) exp(-(k pi/L)^2 t).

The same interval kernel has the method-of-images form

    H1(x, y, t) = sum_m G(x - y + 2mL) - G(x + y + 2mL),  G(s) = exp(-s^2/4t)/sqrt(4 pi t),

which is what the log-space bound check uses: the series has an absolute
error near 1e-14, useless once multiplied by ``exp(|x-y|^2/16t)``.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import qmc

from .errors import InvalidExponentError, InvalidTimeError, TruncationError, ValidationError

TAIL_DIGITS = 14
MIN_MODES = 8


@dataclass(frozen=True)
class KernelSpec:
    """Rectangle ``[0,Lx] x [0,Ly]``, truncation ``M`` (None = adaptive) and derivative order ``k``."""

    Lx: float = 1.0
    Ly: float = 1.0
    M: int | None = None
    k: int = 0

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValidationError("kernel rectangle needs Lx > 0 and Ly > 0")
        if self.M is not None and self.M < MIN_MODES:
            raise ValidationError(f"kernel truncation needs M >= {MIN_MODES}, got {self.M}")
        if self.k not in (0, 1):
            raise ValidationError(f"derivative order k must be 0 or 1, got {self.k}")


def required_modes(spec, t):
    """Adaptive truncation keeping the series tail below ``10**-14``."""
    L = max(spec.Lx, spec.Ly)
    return int(math.ceil(L * math.sqrt(TAIL_DIGITS * math.log(10.0) / (math.pi**2 * t)))) + MIN_MODES


def tail_estimate(spec, M, t):
    L = max(spec.Lx, spec.Ly)
    return math.exp(-(math.pi**2) * M**2 * t / L**2)


def _check_time(t):
    t = float(t)
    if not (t > 0 and np.isfinite(t)):
        raise InvalidTimeError(f"kernel time must be positive and finite, got {t!r}")
    return t


def modes_for(spec, t):
    """Truncation used at time ``t``; raises when a fixed ``M`` is too short."""
    t = _check_time(t)
    need = required_modes(spec, t)
    if spec.M is None:
        return need
    tail = tail_estimate(spec, spec.M, t)
    if tail >= 10.0**-TAIL_DIGITS:
        raise TruncationError(f"M={spec.M} too small for t={t:g} (need {need})", tail=tail)
    return spec.M


def interval_matrix(L, xs, ys, t, M, deriv=False):
    """Matrix ``K[a, b] = H1(xs[a], ys[b], t)`` (or its x-derivative) from the sine series."""
    k = np.arange(1, M + 1)
    w = k * np.pi / L
    decay = np.exp(-(w**2) * t)
    sy = np.sin(np.outer(ys, w))
    if deriv:
        sx = np.cos(np.outer(xs, w)) * w
    else:
        sx = np.sin(np.outer(xs, w))
    return (2.0 / L) * (sx * decay) @ sy.T


def _check_point(spec, p, name):
    p = np.asarray(p, dtype=float)
    tol = 1e-12 * max(spec.Lx, spec.Ly)
    if p.shape != (2,) or not (-tol <= p[0] <= spec.Lx + tol and -tol <= p[1] <= spec.Ly + tol):
        raise ValidationError(f"{name} must be a point of the closed rectangle, got {p!r}")
    return p


def kernel_eval(spec, x, y, t):
    """Truncated series value of ``H(x,t;y)``; for ``k=1`` the Euclidean norm of ``grad_x H``."""
    x = _check_point(spec, x, "x")
    y = _check_point(spec, y, "y")
    M = modes_for(spec, t)
    hx = interval_matrix(spec.Lx, x[:1], y[:1], t, M)[0, 0]
    hy = interval_matrix(spec.Ly, x[1:], y[1:], t, M)[0, 0]
    if spec.k == 0:
        return float(hx * hy)
    dx = interval_matrix(spec.Lx, x[:1], y[:1], t, M, deriv=True)[0, 0]
    dy = interval_matrix(spec.Ly, x[1:], y[1:], t, M, deriv=True)[0, 0]
    return float(math.hypot(dx * hy, hx * dy))


def kernel_mass(spec, x, t):
    """``int H(x,t;y) dy`` in closed form per axis (series, same truncation)."""
    x = _check_point(spec, x, "x")
    M = modes_for(spec, t)
    out = 1.0
    for L, xi in ((spec.Lx, x[0]), (spec.Ly, x[1])):
        k = np.arange(1, M + 1)
        w = k * np.pi / L
        out *= float(np.sum((2.0 / L) * np.sin(w * xi) * (1.0 - np.cos(k * np.pi)) / w * np.exp(-(w**2) * t)))
    return out


# ---------------------------------------------------------------------------
# log-space image sums


def _image_count(L, t):
    return int(math.ceil(math.sqrt(160.0 * t) / (2.0 * L))) + 2


def log_interval(L, x, y, t, deriv=False):
    """``(log|v|, sign)`` of ``H1`` or ``dH1/dx`` for arrays ``x, y`` at scalar ``t``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    m = np.arange(-_image_count(L, t), _image_count(L, t) + 1)
    a = (x - y)[:, None] + 2.0 * m * L
    b = (x + y)[:, None] + 2.0 * m * L
    s = np.concatenate([a, b], axis=1)
    logg = -(s**2) / (4.0 * t) - 0.5 * math.log(4.0 * math.pi * t)
    sign = np.concatenate([np.ones_like(a), -np.ones_like(b)], axis=1)
    # G'(s) = -s/(2t) G(s) and ds/dx = 1 for both image families
    coef = sign * (-s / (2.0 * t)) if deriv else sign
    with np.errstate(divide="ignore"):
        val, sgn = logsumexp(logg, b=coef, axis=1, return_sign=True)
    return val, sgn


def log_ratio(spec, x, y, t):
    """``log R`` with ``R = |D^k H| t^((2+k)/2) exp(|x-y|^2/16t)`` for arrays of points.

    ``x``, ``y`` have shape ``(n, 2)``, ``t`` shape ``(n,)``. Evaluated entirely
    in logs so neither the kernel underflow nor the weight overflow matters.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~(t > 0)):
        raise InvalidTimeError("kernel time must be positive")
    out = np.empty(t.shape)
    for n in range(t.size):
        tn = t[n]
        lx, _ = log_interval(spec.Lx, x[n, 0], y[n, 0], tn)
        ly, _ = log_interval(spec.Ly, x[n, 1], y[n, 1], tn)
        if spec.k == 0:
            lh = lx[0] + ly[0]
        else:
            dx, _ = log_interval(spec.Lx, x[n, 0], y[n, 0], tn, deriv=True)
            dy, _ = log_interval(spec.Ly, x[n, 1], y[n, 1], tn, deriv=True)
            # |grad H| = sqrt((H1x' H1y)^2 + (H1x H1y')^2)
            lh = 0.5 * np.logaddexp(2.0 * (dx[0] + ly[0]), 2.0 * (lx[0] + dy[0]))
        d2 = float(np.sum((x[n] - y[n]) ** 2))
        out[n] = lh + 0.5 * (2 + spec.k) * math.log(tn) + d2 / (16.0 * tn)
    return out


@dataclass
class BoundReport:
    max_ratio: float
    max_ratio_half: float
    argmax: tuple
    stable: bool
    finite: bool
    samples: np.ndarray = field(repr=False)  # columns: t, |x-y|, ratio

    @property
    def ok(self):
        return self.finite and self.stable


def sample_points(spec, n, seed=0, t_range=(1e-4, 1.0)):
    """Scrambled Sobol samples ``(x, y, t)``, log-uniform in ``t``; prefixes are nested."""
    m = max(int(math.ceil(math.log2(max(n, 2)))), 1)
    u = qmc.Sobol(d=5, scramble=True, seed=seed).random_base2(m)[:n]
    x = u[:, 0:2] * [spec.Lx, spec.Ly]
    y = u[:, 2:4] * [spec.Lx, spec.Ly]
    lo, hi = np.log10(t_range[0]), np.log10(t_range[1])
    t = 10.0 ** (lo + (hi - lo) * u[:, 4])
    return x, y, t


def verify_gaussian_bound(spec, sample_count, seed=0):
    """Max of the Gaussian-weighted ratio over ``sample_count`` quasi-random samples.

    Stability compares the max over all samples with the max over the first
    half (a nested Sobol prefix): stable when ``max_all <= 1.5 * max_half``.
    """
    if sample_count < 100:
        raise ValidationError(f"sample_count must be >= 100, got {sample_count}")
    x, y, t = sample_points(spec, sample_count, seed=seed)
    lr = log_ratio(spec, x, y, t)
    finite = bool(np.all(np.isfinite(lr)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        r = np.exp(lr)
    i = int(np.nanargmax(lr))
    half = sample_count // 2
    max_all = float(np.exp(np.nanmax(lr)))
    max_half = float(np.exp(np.nanmax(lr[:half])))
    samples = np.column_stack([t, np.linalg.norm(x - y, axis=1), r])
    return BoundReport(
        max_ratio=max_all,
        max_ratio_half=max_half,
        argmax=(tuple(x[i]), tuple(y[i]), float(t[i])),
        stable=bool(max_all <= 1.5 * max_half),
        finite=finite and np.isfinite(max_all),
        samples=samples,
    )


# ---------------------------------------------------------------------------
# smoothing of initial data


def semigroup(grid, c0, t, deriv=False):
    """Heat evolution ``e(t) = int H(.,t;y) c0(y) dy`` on the grid nodes.

    Trapezoidal quadrature in ``y`` against the series kernel. With
    ``deriv=True`` returns ``(de/dx, de/dy)`` instead.
    """
    spec = KernelSpec(grid.Lx, grid.Ly)
    M = modes_for(spec, t)
    wc = grid.weights * np.asarray(c0, dtype=float)
    Kx = interval_matrix(grid.Lx, grid.x, grid.x, t, M)
    Ky = interval_matrix(grid.Ly, grid.y, grid.y, t, M)
    if not deriv:
        return Ky @ wc @ Kx.T
    Dx = interval_matrix(grid.Lx, grid.x, grid.x, t, M, deriv=True)
    Dy = interval_matrix(grid.Ly, grid.y, grid.y, t, M, deriv=True)
    return Ky @ wc @ Dx.T, Dy @ wc @ Kx.T


def growth_factor(seq):
    """Largest end/start ratio over monotone nondecreasing runs of ``seq``."""
    seq = np.asarray(seq, dtype=float)
    best = 1.0
    start = 0
    for i in range(1, seq.size + 1):
        if i == seq.size or seq[i] < seq[i - 1]:
            if seq[start] > 0:
                best = max(best, seq[i - 1] / seq[start])
            elif seq[i - 1] > 0:
                best = np.inf
            start = i
    return float(best)


def trend_factor(seq):
    """End/start ratio of the trailing nondecreasing run of ``seq``.

    With times listed toward 0 this is the growth that persists to the
    smallest time, which is what a blow-up of the weighted norm looks like;
    an earlier transient rise of bounded data does not count.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.size == 0:
        return 1.0
    start = seq.size - 1
    while start > 0 and seq[start - 1] <= seq[start]:
        start -= 1
    if seq[start] > 0:
        return float(max(seq[-1] / seq[start], 1.0))
    return float(np.inf) if seq[-1] > 0 else 1.0


@dataclass
class SmoothingReport:
    """``growth_*`` is the largest growth over any monotone run, ``trend_*`` over the run ending at the smallest time."""

    times: np.ndarray
    weighted_sup: np.ndarray
    weighted_grad: np.ndarray
    growth_sup: float
    growth_grad: float
    trend_sup: float
    trend_grad: float
    bounded: bool


def verify_smoothing_rates(grid, c0, p, times, exponents=None):
    """Weighted sup and gradient norms of the heat evolution of ``c0``.

    ``c0`` is a field or a callable ``t -> field`` (a family of data, one per
    time). ``times`` should decrease toward 0. Reports
    ``t^(1/p) |e(t)|_inf`` and ``t^(1/2+1/p) |grad e(t)|_inf``; bounded when
    neither sequence grows by 2x or more over its trailing monotone run.
    ``exponents`` overrides the two weights (negative controls only).
    """
    p = float(p)
    if not p > 2:
        raise InvalidExponentError(f"smoothing rates need p > 2, got {p}")
    times = np.asarray([_check_time(t) for t in times])
    a, b = exponents if exponents is not None else (1.0 / p, 0.5 + 1.0 / p)
    sup = np.empty(times.size)
    grad = np.empty(times.size)
    for n, t in enumerate(times):
        data = c0(t) if callable(c0) else c0
        data = np.asarray(data, dtype=float)
        if np.any(data < 0):
            raise ValidationError("smoothing check needs c0 >= 0")
        e = semigroup(grid, data, t)
        gx, gy = semigroup(grid, data, t, deriv=True)
        sup[n] = t**a * np.max(np.abs(e))
        grad[n] = t**b * np.max(np.hypot(gx, gy))
    ts, tg = trend_factor(sup), trend_factor(grad)
    return SmoothingReport(times, sup, grad, growth_factor(sup), growth_factor(grad), ts, tg,
                           bool(ts < 2.0 and tg < 2.0))


def sharp_bump_family(grid, p, width=0.3, center=None):
    """``t -> delta^(-2/p) exp(-|x-x0|^2/delta^2)`` with ``delta = width*sqrt(t)``.

    Every member has the same ``L^p`` norm (up to boundary truncation), and the
    width shrinks with ``t`` so the data is as sharp as the time allows.
    """
    x0, y0 = center if center is not None else (0.5 * grid.Lx, 0.5 * grid.Ly)
    X, Y = grid.XY

    def member(t):
        d = width * math.sqrt(t)
        return d ** (-2.0 / p) * np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / d**2)

    return member
