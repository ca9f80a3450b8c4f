"""Dense linear-algebra substrate shared by all solvers.

Everything here is desk scale (a few hundred rows at most), so matrices are
plain dense ndarrays.  The spectral helpers evaluate scalar functions on the
squared singular values, i.e. on the spectrum of F F^T / F^T F.
"""

import numpy as np
import scipy.linalg

# Relative threshold below which singular values are dropped as numerical zeros.
RANK_TRUNCATION = 1e-12


class SpectralDecomposition:
    """Truncated SVD of a dense operator: F = U diag(s) V^T.

    Singular values below RANK_TRUNCATION * s[0] are discarded, so the stored
    factors always have full numerical rank.
    """

    def __init__(self, left_vectors, singular_values, right_vectors):
        self.left_vectors = np.asarray(left_vectors, dtype=float)
        self.singular_values = np.asarray(singular_values, dtype=float)
        self.right_vectors = np.asarray(right_vectors, dtype=float)

    @property
    def rank(self):
        return self.singular_values.size

    @property
    def shape(self):
        return (self.left_vectors.shape[0], self.right_vectors.shape[0])

    def reconstruct(self):
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def svd(A):
    """Truncated SVD of a dense matrix with relative rank cutoff."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or min(A.shape) < 1:
        raise ValueError(f"expected a 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        keep = 0
    else:
        keep = int(np.sum(s > RANK_TRUNCATION * s[0]))
    return SpectralDecomposition(U[:, :keep], s[:keep], Vt[:keep].T)


def apply_spectral_function(dec, f, side="left"):
    """Evaluate g(F F^T) (side="left") or g(F^T F) (side="right").

    The function f receives the squared singular values.  On the orthogonal
    complement of the singular vectors the operator acts as f(0) * I, which
    matters for functions with f(0) != 0 (e.g. the cosh filter at zero).
    """
    if side == "left":
        W = dec.left_vectors
        n = dec.shape[0]
    elif side == "right":
        W = dec.right_vectors
        n = dec.shape[1]
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    lam = dec.singular_values**2
    fvals = np.asarray([float(f(x)) for x in lam])
    if not np.all(np.isfinite(fvals)):
        raise ValueError("spectral function returned non-finite values")
    f0 = float(f(0.0))
    if not np.isfinite(f0):
        raise ValueError("spectral function is non-finite at 0")
    M = (W * fvals) @ W.T
    if f0 != 0.0:
        # f(0) on the complement of the column span.
        M += f0 * (np.eye(n) - W @ W.T)
    return 0.5 * (M + M.T)


def solve_sym(A, B):
    """Solve A X = B for symmetric positive definite A via Cholesky."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    try:
        c, low = scipy.linalg.cho_factor(A)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"symmetric solve failed, matrix singular/indefinite: {exc}"
        ) from exc
    return scipy.linalg.cho_solve((c, low), B)


def symmetrize(A):
    return 0.5 * (A + A.T)


def dump_matrix(A, path):
    """Text dump: first line "rows cols", then one row per line, >=15 digits."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"{A.shape[0]} {A.shape[1]}\n")
        for row in A:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def load_matrix(path):
    with open(path) as fh:
        rows, cols = (int(tok) for tok in fh.readline().split())
        A = np.loadtxt(fh, ndmin=2)
    if A.shape != (rows, cols):
        raise ValueError(f"header says {rows}x{cols}, data is {A.shape}")
    return A
