"""Numpy implementation of the accumulation kernel (no compiled code)."""

import numpy as np


def accumulate(U_T, U_B, W, owner, frm, to, lag):
    """Add ``W[owner[e], g]`` into ``U_T[g, lag[e], frm[e], to[e]]`` and
    ``U_B[g, lag[e], frm[e]]`` for every event ``e`` in order.

    ``np.add.at`` is unbuffered, so each cell receives its terms in event
    order, the same order as the compiled kernel.
    """
    if len(owner) == 0:
        return
    vals = W[owner].T
    np.add.at(U_T, (slice(None), lag, frm, to), vals)
    np.add.at(U_B, (slice(None), lag, frm), vals)
