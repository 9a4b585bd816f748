"""Small deterministic Nelder-Mead for the two-coefficient local fits.

Operates on plain floats so the per-evaluation overhead stays far below
the compiled objective; validated against scipy's implementation in the
test suite.
"""

import math


def nelder_mead_2d(f, x0, y0, step_x=0.5, step_y=0.25, fatol=1e-7, xatol=1e-6, maxfev=1000):
    """Minimize f(x, y).  Returns (x, y, fval, nfev, converged)."""

    def safe(x, y):
        v = f(x, y)
        return v if v == v else math.inf  # NaN -> +inf

    pts = [(x0, y0), (x0 + step_x, y0), (x0, y0 + step_y)]
    vals = [safe(*p) for p in pts]
    nfev = 3
    while nfev < maxfev:
        order = sorted(range(3), key=lambda i: vals[i])
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        f_spread = vals[2] - vals[0]
        x_spread = max(
            abs(pts[1][0] - pts[0][0]) + abs(pts[1][1] - pts[0][1]),
            abs(pts[2][0] - pts[0][0]) + abs(pts[2][1] - pts[0][1]),
        )
        if f_spread <= fatol and x_spread <= xatol:
            return pts[0][0], pts[0][1], vals[0], nfev, True

        cx = 0.5 * (pts[0][0] + pts[1][0])
        cy = 0.5 * (pts[0][1] + pts[1][1])
        wx, wy = pts[2]
        rx, ry = cx + (cx - wx), cy + (cy - wy)
        fr = safe(rx, ry)
        nfev += 1
        if vals[0] <= fr < vals[1]:
            pts[2], vals[2] = (rx, ry), fr
            continue
        if fr < vals[0]:
            ex, ey = cx + 2.0 * (rx - cx), cy + 2.0 * (ry - cy)
            fe = safe(ex, ey)
            nfev += 1
            if fe < fr:
                pts[2], vals[2] = (ex, ey), fe
            else:
                pts[2], vals[2] = (rx, ry), fr
            continue
        if fr < vals[2]:
            ox, oy = cx + 0.5 * (rx - cx), cy + 0.5 * (ry - cy)
            fo = safe(ox, oy)
            nfev += 1
            if fo <= fr:
                pts[2], vals[2] = (ox, oy), fo
                continue
        else:
            ix, iy = cx + 0.5 * (wx - cx), cy + 0.5 * (wy - cy)
            fi = safe(ix, iy)
            nfev += 1
            if fi < vals[2]:
                pts[2], vals[2] = (ix, iy), fi
                continue
        # shrink toward the best vertex
        for j in (1, 2):
            sx = pts[0][0] + 0.5 * (pts[j][0] - pts[0][0])
            sy = pts[0][1] + 0.5 * (pts[j][1] - pts[0][1])
            pts[j] = (sx, sy)
            vals[j] = safe(sx, sy)
        nfev += 2

    order = sorted(range(3), key=lambda i: vals[i])
    best = order[0]
    return pts[best][0], pts[best][1], vals[best], nfev, False
