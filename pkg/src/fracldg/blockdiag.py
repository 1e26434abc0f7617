"""Block-diagonal matrices with equal square blocks (DG mass matrices)."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class BlockDiagonal:
    """Stack of ``K`` dense ``n x n`` SPD blocks acting on vectors of length ``K*n``."""

    def __init__(self, blocks):
        blocks = np.asarray(blocks, dtype=float)
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
            raise ValueError("blocks must have shape (K, n, n)")
        self.blocks = blocks
        self._inv = None

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def block_size(self) -> int:
        return self.blocks.shape[1]

    @property
    def shape(self):
        n = self.n_blocks * self.block_size
        return (n, n)

    @property
    def inverse_blocks(self) -> np.ndarray:
        if self._inv is None:
            self._inv = np.linalg.inv(self.blocks)
            # inverses of symmetric blocks are symmetric; remove round-off asymmetry
            self._inv = 0.5 * (self._inv + self._inv.transpose(0, 2, 1))
        return self._inv

    def _apply(self, blocks, x):
        x = np.asarray(x, dtype=float)
        K, n = self.n_blocks, self.block_size
        if x.shape[0] != K * n:
            raise ValueError(f"vector length {x.shape[0]} does not match {K * n}")
        tail = x.shape[1:]
        xb = x.reshape(K, n, -1)
        return np.matmul(blocks, xb).reshape((K * n,) + tail)

    def matvec(self, x) -> np.ndarray:
        return self._apply(self.blocks, x)

    def solve(self, x) -> np.ndarray:
        return self._apply(self.inverse_blocks, x)

    def __matmul__(self, x):
        return self.matvec(x)

    def tocsr(self) -> sp.csr_matrix:
        return sp.block_diag(list(self.blocks), format="csr")

    def toarray(self) -> np.ndarray:
        return self.tocsr().toarray()
