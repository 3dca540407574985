"""Conventional association schemes used for comparison.

Neither scheme looks at rate requirements: both hand BS chains to
whichever UE chains have the best links, so the association flags z
mark "has a link", not "requirement met".  Audit their output with the
structural constraint subset.
"""

from __future__ import annotations

import numpy as np

from .instance import AssociationInstance, AssociationSolution, solution_from_x
from .step2flow import full_residual, solve_step2


def max_sum_rate(inst: AssociationInstance) -> AssociationSolution:
    """Jointly assign every BS chain so the network sum rate is maximal."""
    local = solve_step2(full_residual(inst))
    # The full residual preserves chain order, so local indexing is global.
    return solution_from_x(inst, local.x)


def max_snr(inst: AssociationInstance, bs_order=None) -> AssociationSolution:
    """Sequential per-BS greedy: each chain takes the best free UE chain.

    BSs are visited in bs_order (default ascending); capacity is the
    monotone proxy for SNR at fixed bandwidth.  Zero-capacity pairings
    are skipped; capacity ties go to the lowest UE chain index.
    """
    if bs_order is None:
        bs_order = np.arange(inst.n_bs)
    bs_order = np.asarray(bs_order, dtype=int)
    if not np.array_equal(np.sort(bs_order), np.arange(inst.n_bs)):
        raise ValueError(f"bs_order must be a permutation of 0..{inst.n_bs - 1}")

    x = np.zeros(inst.c.shape, dtype=int)
    free = np.ones(inst.n_ue_chains, dtype=bool)
    for b in bs_order:
        for j in np.flatnonzero(inst.bs_of_chain == b):
            gains = np.where(free, inst.c[:, j], 0.0)
            if gains.max(initial=0.0) <= 0.0:
                continue
            i = int(np.argmax(gains))  # argmax returns the lowest index on ties
            x[i, j] = 1
            free[i] = False
    return solution_from_x(inst, x)
