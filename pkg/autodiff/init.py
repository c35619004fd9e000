"""
Semi-orthogonal weight initialization
"""

import numpy as np


def semi_orthogonal_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """
    Matrix with orthonormal columns (rows >= cols) or rows (rows < cols).

    Built from the QR decomposition of a standard-normal draw; the sign of each
    column follows diag(R) so the result is deterministic given the generator.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"Invalid dimensions {rows}x{cols}")
    tall, short = max(rows, cols), min(rows, cols)
    q, r = np.linalg.qr(rng.standard_normal((tall, short)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    return q if rows >= cols else q.T
