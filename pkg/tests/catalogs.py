"""Catalog members shared by the module tests and the acceptance suite."""

import numpy as np

from cylwig import cylmeasure as cm
from cylwig import genfun as gf
from cylwig.symplectic import LinearMap, PhaseSpace


def state_catalog(space):
    """Positive state families with valid parameters; Translate outputs are not states."""
    d = space.dim
    z = np.linspace(0.2, -0.3, space.modes) + 0.1j
    q = np.eye(d) + 0.3 * np.diag(np.ones(d - 1), 1) + 0.3 * np.diag(np.ones(d - 1), -1)
    items = [
        gf.Vacuum(space),
        gf.Coherent(space, z),
        gf.QuantumGaussian(space, q, np.linspace(0.1, 0.4, d), np.eye(d)),
        gf.GibbsPaper(space, np.linspace(1, 2, space.modes), gf.Schedule(0.4, 1.0), gf.Schedule.const(0.5)),
        gf.Mixture((0.4, 0.6), (gf.Vacuum(space), gf.Coherent(space, z))),
        gf.Convolution(gf.Coherent(space, z), gf.Vacuum(space)),
        gf.Scale(0.3, gf.Vacuum(space)),
        gf.PullBack(LinearMap.rotation(space, 0.7), gf.Coherent(space, z),
                    gf.PhaseSchedule(gf.Schedule(1.0, 1.0), linear=np.ones(d))),
    ]
    if space.modes == 2:
        one = PhaseSpace(1)
        items.append(gf.Tensor(gf.Vacuum(one), gf.Coherent(one, [0.3 - 0.2j])))
    return items


def measure_catalog(space):
    d = space.dim
    p = np.linspace(0.3, -0.5, d)
    q = np.eye(d) * 0.7 + 0.2 * np.ones((d, d))
    return [
        cm.Dirac(space, np.zeros(d)),
        cm.Dirac(space, p),
        cm.Gaussian(space, p, q),
        cm.Mixture((0.3, 0.7), (cm.Dirac(space, p), cm.Gaussian(space, -p, q))),
        cm.Convolution(cm.Dirac(space, p), cm.Gaussian(space, np.zeros(d), q)),
        cm.Scale(0.4, cm.Gaussian(space, p, q)),
        cm.Pushforward(LinearMap.rotation(space, 0.9), cm.Gaussian(space, p, q)),
    ]
