"""Ready-made models for the Beverton-Holt and Ricker experiments."""
from __future__ import annotations

import numpy as np

from .model import BevertonHolt, Habitat, IdeModel, LaplaceKernel, Ricker, kernel_mass, ricker_rates


def beverton_holt_model(alpha: float, a: float = -3.0, b: float = 3.0) -> IdeModel:
    """Laplace dispersal ``delta_t = 2 + sin(t/3)``, growth rates ``3 - sin(t x / 5)``."""
    return IdeModel(
        Habitat(a, b),
        LaplaceKernel(lambda t: 2.0 + np.sin(t / 3.0)),
        BevertonHolt(alpha, lambda t, y: 3.0 - np.sin(t * np.asarray(y) / 5.0)),
    )


def ricker_model(gamma: float = 0.2, delta: float = 2.0, source: float = 0.1, c: float = 0.5,
                 a: float = -3.0, b: float = 3.0, autonomous: bool = False) -> IdeModel:
    """Asymptotically autonomous Ricker IDE with rates ``gamma (1 + c (k0 gamma)**t)``.

    With ``autonomous=True`` the rates are frozen at the limit ``gamma``.
    """
    habitat = Habitat(a, b)
    kernel = LaplaceKernel(lambda t: delta)
    base = IdeModel(habitat, kernel, Ricker(lambda t: gamma, gamma),
                    lambda x: np.full(np.shape(x), source), time_domain=(0, None))
    if autonomous:
        return base
    rates = ricker_rates(gamma, kernel_mass(base), c)
    return IdeModel(habitat, kernel, Ricker(rates, gamma), base.inhomogeneity,
                    time_domain=(0, None))
