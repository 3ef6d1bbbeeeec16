"""Brute-force references used by the optimizer tests."""

import numpy as np


def pcf_grid(caps, e, n=200, r_max=1.0):
    """Best PCF rate over an n^3 grid of (alpha1, rx, ry), both role assignments."""
    best = 0.0
    for c, ee in ((caps, e), (caps.swapped(), e.swapped())):
        best = max(best, _pcf_grid_single(c, ee, n, r_max))
    return best


def _pcf_grid_single(c, e, n, r_max):
    rx, ry = np.meshgrid(np.linspace(0, r_max, n), np.linspace(0, r_max, n), indexing="ij")
    sw = (rx >= e.hx_given_y - 1e-12) & (ry >= e.hy_given_x - 1e-12) & (rx + ry >= e.hxy - 1e-12)
    ok_rates = sw & (rx <= ry)
    best = 0.5 * c.c_af1  # alpha1 = 0: Relay-1 forwards everything it hears
    if c.c_1d <= 0 or c.c_2d <= 0:
        return best
    for a1 in np.linspace(0, 1, n)[1:]:
        a2 = (c.c_1d - a1 * (c.c_1d + rx)) / (2 * c.c_1d)
        ok = ok_rates & (a2 >= 0) & (a1 * ry <= (1 - a1) * c.c_2d)
        if ok.any():
            best = max(best, float((a1 * e.i_z_xy + a2 * c.c_af1)[ok].max()))
    return best


def cf_grid(caps, e, n=400):
    """Pure CF over a grid of (rx, ry) with the listen fraction at its limit."""
    rx, ry = np.meshgrid(np.linspace(0, 1, n), np.linspace(0, 1, n), indexing="ij")
    sw = (rx >= e.hx_given_y - 1e-12) & (ry >= e.hy_given_x - 1e-12) & (rx + ry >= e.hxy - 1e-12)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.minimum(caps.c_1d / (rx + caps.c_1d), caps.c_2d / (ry + caps.c_2d))
    a = np.nan_to_num(a)
    return float((e.i_z_xy * a)[sw].max()) if sw.any() else 0.0
