import numpy as np

from conequant.conemodel import Model, State, from_plane


def planar_min_distance(params, u, v, ud, vd, t_end, n=4001):
    s = np.linspace(0, t_end, n)
    if params.model is Model.FREE:
        us, vs = u + ud * s, v + vd * s
    else:
        w = params.omega
        us = u * np.cos(w * s) + ud / w * np.sin(w * s)
        vs = v * np.cos(w * s) + vd / w * np.sin(w * s)
    return float(np.min(np.hypot(us, vs)))


def random_states(params, rng, count, t_end=10.0, min_distance=0.2):
    """Initial states at t = 0 whose exact path stays clear of the vertex."""
    out = []
    while len(out) < count:
        u, v = rng.uniform(-2, 2, 2)
        ud, vd = rng.uniform(-1, 1, 2)
        if np.hypot(u, v) < 0.3 or planar_min_distance(params, u, v, ud, vd, t_end) < min_distance:
            continue
        r, phi, rdot, phidot = from_plane(params.k, u, v, ud, vd)
        out.append(State(0.0, float(r), float(phi), float(rdot), float(phidot)))
    return out


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
