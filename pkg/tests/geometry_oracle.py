"""Independent polygon geometry used as a test oracle."""

import numpy as np


def _clip(subject, clip):
    # Sutherland-Hodgman; clip is convex and counter-clockwise
    out = list(subject)
    n = len(clip)
    for i in range(n):
        a, b = clip[i], clip[(i + 1) % n]
        inp, out = out, []
        if not inp:
            break
        side = lambda p: (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        for j in range(len(inp)):
            p, q = inp[j], inp[(j + 1) % len(inp)]
            sp, sq = side(p), side(q)
            if sp >= 0:
                out.append(p)
            if (sp >= 0) != (sq >= 0):
                t = sp / (sp - sq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def polygon_area(poly):
    if len(poly) < 3:
        return 0.0
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _ccw(poly):
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    signed = np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))
    return poly if signed >= 0 else poly[::-1]


def blocking_region(r, phi, l, delta):
    """Centres of length-l segments at angle delta that cut the link of length r at angle phi."""
    hx, hy = 0.5 * l * np.cos(delta), 0.5 * l * np.sin(delta)
    ex, ey = r * np.cos(phi), r * np.sin(phi)
    return _ccw([(-hx, -hy), (ex - hx, ey - hy), (ex + hx, ey + hy), (hx, hy)])


def union_area(r1, r2, theta, l, delta):
    # link 1 points along theta, link 2 along the x axis
    p1 = blocking_region(r1, theta, l, delta)
    p2 = blocking_region(r2, 0.0, l, delta)
    a1, a2 = polygon_area(p1), polygon_area(p2)
    if a1 == 0 or a2 == 0:
        return a1 + a2
    return a1 + a2 - polygon_area(_clip(p1, p2))
