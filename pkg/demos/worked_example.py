"""Qubit dephasing: relative-entropy difference against the Petz fidelity bound.

Run with ``python3 demos/worked_example.py``.
"""

import math

import numpy as np

from recoverability import (
    Instance,
    check_lower,
    delta_tilde,
    dephasing_channel,
    fidelity,
    petz,
    rel_ent_difference,
)

rho = np.array([[0.5, 0.4], [0.4, 0.5]])
sigma = np.eye(2) / 2
N = dephasing_channel(2)

delta = rel_ent_difference(rho, sigma, N)
R = petz(sigma, N)
F = fidelity(rho, R(N(rho)))
print(f"Delta               = {delta:.9f}")
print(f"-ln F(rho, R(N))    = {-math.log(F):.9f}")
print(f"Delta~ at alpha 1/2 = {delta_tilde(rho, sigma, N, 0.5):.9f}")

rep = check_lower(Instance(rho, sigma, N))
print(f"verdict={rep.verdict} witness_t={rep.witness_t} deficit={rep.deficit:.6f}")

# sigma is recovered exactly, rho is not
print("R(N(sigma)) =\n", np.round(R(N(sigma)).real, 12))
print("R(N(rho))   =\n", np.round(R(N(rho)).real, 12))
