"""Independent, deliberately naive reference implementations used by the tests."""

import itertools


def pair_violations(values: dict, rules) -> int:
    """Count ordered pairs (s, t), s != t, breaking a distance rule; values maps site -> symbol."""
    sites = list(values)
    bad = 0
    for s in sites:
        for t in sites:
            if s == t:
                continue
            d = max(abs(s[0] - t[0]), abs(s[1] - t[1]))
            for first, second, R in rules:
                if values[s] in first and values[t] in second and d <= R:
                    bad += 1
    return bad


def wr_rule_list(R1, R2):
    return [({"+", "-"}, {"+", "-"}, R1), ({"+"}, {"-"}, R2)]


def brute_force_count(sites, symbols, rules, fixed=None):
    """Number of assignments to ``sites`` admissible together with ``fixed``."""
    fixed = dict(fixed or {})
    n = 0
    for combo in itertools.product(symbols, repeat=len(sites)):
        vals = dict(fixed)
        vals.update(zip(sites, combo))
        if pair_violations(vals, rules) == 0:
            n += 1
    return n


def rect_sites(x0, y0, x1, y1):
    return [(x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)]


def brute_2x2_count(width, height, q, allowed):
    n = 0
    for combo in itertools.product(range(q), repeat=width * height):
        g = [combo[r * width : (r + 1) * width] for r in range(height)]
        ok = all(
            (g[y][x], g[y][x + 1], g[y + 1][x], g[y + 1][x + 1]) in allowed
            for y in range(height - 1)
            for x in range(width - 1)
        )
        n += ok
    return n
