"""One-dimensional maximization over quantiles: coarse scan, golden section, optional polish."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SCAN_POINTS = 2048
REFINE_WIDTH = 1e-12


def golden_section_max(f, a: float, b: float, tol: float = REFINE_WIDTH, max_iter: int = 500):
    """Maximize a unimodal scalar ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    if f1 >= f2:
        return x1, f1
    return x2, f2


def scan_points(lo: float, hi: float, n_scan: int = SCAN_POINTS, extra=()) -> np.ndarray:
    width = hi - lo
    pts = lo + width * np.arange(1, n_scan + 1) / n_scan
    # log-spaced points near lo catch optima at very small quantiles
    near = lo + width * np.logspace(-12, -math.log10(n_scan), 48)
    pts = np.concatenate((pts, near, [e for e in extra if lo < e <= hi]))
    if lo > 0:
        pts = np.concatenate(([lo], pts))
    pts = np.unique(pts)
    pts[-1] = hi
    return pts


def maximize(f, lo: float, hi: float, *, slope=None, extra=(), n_scan: int = SCAN_POINTS):
    """Maximize ``f`` over ``(lo, hi]`` (``[lo, hi]`` when ``lo > 0``).

    ``f`` must accept numpy arrays.  The scan picks the best of ``n_scan``
    uniform points (plus log-spaced points near ``lo`` and ``extra``), golden
    section refines inside the neighbouring bracket to width 1e-12, and if
    ``slope`` (the derivative of ``f``) is given, a bracketed root of it near
    the refined point replaces the point when it is at least as good up to
    rounding.  The polish matters because comparing function values can only
    locate a smooth maximum to about sqrt(machine epsilon).

    Ties keep the smaller argument (the scan order), i.e. the higher price.
    """
    pts = scan_points(lo, hi, n_scan, extra)
    vals = np.asarray(f(pts), dtype=float)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    k = int(np.argmax(vals))
    best_x, best_f = float(pts[k]), float(vals[k])

    a = float(pts[k - 1]) if k > 0 else float(pts[0])
    b = float(pts[k + 1]) if k + 1 < len(pts) else float(pts[-1])
    if b > a:
        x, fx = golden_section_max(lambda t: float(f(t)), a, b)
        if fx > best_f:
            best_x, best_f = x, fx

    if slope is not None:
        best_x, best_f = _polish(f, slope, best_x, best_f, float(pts[0]), hi)
    return best_x, best_f


def _polish(f, slope, x, fx, lo, hi):
    for w in (1e-9, 1e-7, 1e-5):
        step = w * min(x, 1.0)
        a, b = max(lo, x - step), min(hi, x + step)
        try:
            sa, sb = slope(a), slope(b)
        except (ValueError, ZeroDivisionError):
            return x, fx
        if not (np.isfinite(sa) and np.isfinite(sb)):
            return x, fx
        if sa > 0.0 > sb:
            try:
                root = brentq(slope, a, b, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=200)
            except (ValueError, ZeroDivisionError, RuntimeError):
                return x, fx
            fr = float(f(root))
            if fr >= fx - 1e-13 * abs(fx):
                return root, fr
            return x, fx
    return x, fx
