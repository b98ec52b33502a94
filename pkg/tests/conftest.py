import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from bargmann_circuits.circuit import CircuitSpec, ModeLabel, make_component

ACCEPTANCE_LINES: list[str] = []


def random_symmetric(rng, n, scale=1.0):
    """Complex symmetric matrix with entries of magnitude <= scale."""
    A = rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))
    A = 0.5 * (A + A.T)
    return scale * A / max(1.0, np.abs(A).max())


def random_normalizable(rng, n, top=0.6):
    """Symmetric B with largest singular value <= top, so the state is normalizable."""
    U = unitary_group.rvs(n, random_state=rng) if n > 1 else np.exp(2j * np.pi * rng.uniform(size=(1, 1)))
    s = rng.uniform(0, top, n)
    return U @ np.diag(s) @ U.T


def random_circuit(rng, nmodes, ncomp=5, coupling=0.3):
    modes = tuple(ModeLabel(chr(ord("a") + k)) for k in range(nmodes))
    names = [m.name for m in modes]
    comps = []
    for _ in range(ncomp):
        kind = rng.choice(["beam_splitter", "phase_shift", "squeezer", "down_converter"] if nmodes > 1 else ["phase_shift", "squeezer"])
        s = coupling * rng.uniform(0.2, 1.0) * np.exp(2j * np.pi * rng.uniform())
        if kind == "beam_splitter":
            i, j = rng.choice(nmodes, 2, replace=False)
            comps.append(make_component(kind, [names[i], names[j]], {"theta": rng.uniform(0, math.pi), "phi": rng.uniform(0, 2 * math.pi)}))
        elif kind == "phase_shift":
            comps.append(make_component(kind, [names[rng.integers(nmodes)]], {"phi": rng.uniform(0, 2 * math.pi)}))
        elif kind == "squeezer":
            comps.append(make_component(kind, [names[rng.integers(nmodes)]], {"strength": s}))
        else:
            i, j = rng.choice(nmodes, 2, replace=False)
            comps.append(make_component(kind, [names[i], names[j]], {"strength": s}))
    return CircuitSpec(modes, tuple(comps))


def two_mode(strength=0.2, extra=()):
    modes = (ModeLabel("a"), ModeLabel("b"))
    comps = (make_component("down_converter", ["a", "b"], {"strength": strength}),) + tuple(extra)
    return CircuitSpec(modes, comps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record_acceptance():
    def record(number, title, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
