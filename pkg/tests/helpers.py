"""Shared test helpers."""

import numpy as np


def random_density_matrix(n_qubits, rng, rank=None):
    """Random mixed state rho = G G^dag / Tr, with G of shape (L, rank)."""
    dim = 1 << n_qubits
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


# criterion number -> (passed, detail); filled by the acceptance tests, printed at session end
ACCEPTANCE_RESULTS = {}
