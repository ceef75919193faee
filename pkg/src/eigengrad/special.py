"""Bessel functions of integer order and fully normalized Legendre functions.

Only what the analytic eigenfunction oracles need, with no dependency on an
external special-function library.
"""

from __future__ import annotations

import math

import numpy as np

_SERIES_MAX_X = 4.0


class BracketError(RuntimeError):
    """No sign change was found in the searched interval."""


def _bessel_series(n, x):
    half = 0.5 * x
    term = half ** n / math.factorial(n)
    total = term.copy()
    q = -half * half
    for k in range(1, 60):
        term = term * q / (k * (k + n))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total) + 1e-300):
            break
    return total


def _bessel_miller(orders, x):
    """Backward recurrence normalized by ``J_0 + 2 sum J_2k = 1`` (x > 0).

    Returns one row per entry of ``orders``.
    """
    xmax = float(x.max())
    n = max(orders)
    top = max(n, int(xmax)) + 30 + int(math.sqrt(40.0 * max(n, xmax)))
    top += top % 2
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    result = np.zeros((len(orders), len(x)))
    for k in range(top, 0, -1):
        # j_cur = J_k, j_prev = J_{k-1}
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        for row, o in enumerate(orders):
            if k - 1 == o:
                result[row] = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        if k % 8 == 0:
            big = np.abs(j_cur) > 1e200
            if big.any():
                j_cur[big] *= 1e-200
                j_next[big] *= 1e-200
                norm[big] *= 1e-200
                result[:, big] *= 1e-200
    norm += j_cur
    return result / norm


def _bessel_many(orders, x):
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("bessel_j expects x >= 0")
    out = np.empty((len(orders), len(x)))
    small = x <= _SERIES_MAX_X
    if small.any():
        for row, o in enumerate(orders):
            out[row, small] = _bessel_series(o, x[small])
    if (~small).any():
        out[:, ~small] = _bessel_miller(orders, x[~small])
    return out[:, 0] if scalar else out


def bessel_j(n: int, x):
    """Bessel function of the first kind ``J_n(x)`` for integer ``n >= 0``, ``x >= 0``.

    Power series below x = 4, Miller's normalized backward recurrence above.
    """
    if n < 0:
        raise ValueError("order must be nonnegative")
    return _bessel_many((n,), x)[0]


def bessel_triplet(n: int, x):
    """``(J_n, J_n', J_n / x)`` from one recurrence pass (the last is 0 for n = 0)."""
    if n < 0:
        raise ValueError("order must be nonnegative")
    if n == 0:
        j0, j1 = _bessel_many((0, 1), x)
        return j0, -j1, np.zeros_like(j0)
    lo, mid, hi = _bessel_many((n - 1, n, n + 1), x)
    return mid, 0.5 * (lo - hi), (lo + hi) / (2.0 * n)


def bessel_jp(n: int, x):
    """Derivative ``J_n'(x)``."""
    if n == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))


def bessel_j_over_x(n: int, x):
    """``J_n(x) / x`` for ``n >= 1``, finite at ``x = 0``."""
    if n < 1:
        raise ValueError("J_0(x)/x is singular at 0")
    return (bessel_j(n - 1, x) + bessel_j(n + 1, x)) / (2.0 * n)


def _bisect(f, a, b, fa, xtol=1e-14):
    while b - a > xtol * max(1.0, abs(a)):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def bessel_zero(m: int, k: int, kind: str = "function") -> float:
    """The ``k``-th positive zero of ``J_m`` (``kind="function"``) or ``J_m'``.

    Zeros are bracketed by scanning from ``x = m`` (no positive zero of
    either function lies below the order) in steps of a fraction of the
    asymptotic spacing pi, then refined by bisection to about 1e-14.
    """
    if not (0 <= m <= 50 and 1 <= k <= 50):
        raise ValueError("need 0 <= m <= 50 and 1 <= k <= 50")
    if kind == "function":
        f = lambda x: bessel_j(m, x)  # noqa: E731
    elif kind == "derivative":
        f = lambda x: bessel_jp(m, x)  # noqa: E731
    else:
        raise ValueError("kind must be 'function' or 'derivative'")
    start = max(float(m), 1e-3)
    # McMahon: j_{m,k} ~ (k + m/2 - 1/4) pi
    limit = (k + 0.5 * m + 2) * math.pi + 10.0
    grid = np.arange(start, limit + math.pi / 16, math.pi / 16)
    values = f(grid)
    sign = np.sign(values)
    # a zero lies in (grid[i], grid[i+1]] when the sign changes or the right end is an exact zero
    hits = np.flatnonzero((sign[:-1] * sign[1:] < 0) | ((sign[1:] == 0) & (sign[:-1] != 0)))
    if len(hits) < k:
        raise BracketError(f"zero {k} of J_{m}{'' if kind == 'function' else chr(39)} "
                           f"not bracketed in [{start:.3f}, {limit:.3f}]")
    i = hits[k - 1]
    if sign[i + 1] == 0:
        return float(grid[i + 1])
    return _bisect(lambda x: float(f(x)), float(grid[i]), float(grid[i + 1]), float(values[i]))


# ---------------------------------------------------------------- Legendre


def _legendre_core(l: int, m: int, x):
    """``T`` and ``dT/dx`` with ``Pbar_l^m(x) = (1 - x^2)^(m/2) T(x)``.

    ``Pbar`` is normalized so that ``Y_l^0 = Pbar_l^0`` and the real harmonic
    ``sqrt(2) Pbar_l^m cos(m phi)`` have unit L2 norm on the sphere (no
    Condon-Shortley phase).  Recurrence in ``l`` at fixed ``m``.
    """
    x = np.asarray(x, dtype=np.float64)
    a_mm = 1.0
    for k in range(1, m + 1):
        a_mm *= (2 * k + 1) / (2 * k)
    t_prev2 = None
    t_prev = np.full_like(x, math.sqrt(a_mm / (4 * math.pi)))
    d_prev = np.zeros_like(x)
    d_prev2 = None
    for n in range(m + 1, l + 1):
        a = math.sqrt((4 * n * n - 1) / (n * n - m * m))
        t = a * x * t_prev
        d = a * (t_prev + x * d_prev)
        if t_prev2 is not None:
            bb = -math.sqrt((2 * n + 1) * ((n - 1) ** 2 - m * m) / ((2 * n - 3) * (n * n - m * m)))
            t = t + bb * t_prev2
            d = d + bb * d_prev2
        t_prev2, d_prev2 = t_prev, d_prev
        t_prev, d_prev = t, d
    return t_prev, d_prev


def real_sph_harm(l: int, m: int, theta, phi):
    """Real orthonormal spherical harmonic and its intrinsic gradient components.

    Returns ``(Y, dY/dtheta, (1/sin theta) dY/dphi)``; ``m < 0`` selects the
    ``sin(|m| phi)`` member.
    """
    if not 0 <= abs(m) <= l <= 100:
        raise ValueError("need |m| <= l <= 100")
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=np.float64), np.asarray(phi, dtype=np.float64))
    c, s = np.cos(theta), np.sin(theta)
    am = abs(m)
    T, dT = _legendre_core(l, am, c)
    if m == 0:
        return T, -s * dT, np.zeros_like(T)
    if m > 0:
        trig, dtrig = np.cos(am * phi), -am * np.sin(am * phi)
    else:
        trig, dtrig = np.sin(am * phi), am * np.cos(am * phi)
    r2 = math.sqrt(2.0)
    sm1 = s ** (am - 1)
    y = r2 * s * sm1 * T * trig
    dth = r2 * trig * (am * sm1 * c * T - s * s * sm1 * dT)
    dph = r2 * sm1 * T * dtrig
    return y, dth, dph
