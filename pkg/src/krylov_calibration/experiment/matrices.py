"""Test matrices: MatrixMarket files, built-in generators, Jacobi scaling."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse

from ..errors import ConfigError, MatrixMarketError
from ..linalg import SpdMatrix

__all__ = [
    "read_matrix_market",
    "write_matrix_market",
    "jacobi_precondition",
    "builtin_matrix",
    "load_matrix",
    "GENERATORS",
]

_FIELDS = ("real", "integer", "pattern", "double")
_SYMMETRY = ("general", "symmetric")


def _data_lines(fh):
    for raw in fh:
        line = raw.strip()
        if line and not line.startswith("%"):
            yield line


def read_matrix_market(path):
    """Read a symmetric matrix from a MatrixMarket file.

    Coordinate and array layouts with real, integer or pattern entries
    are accepted. Files flagged ``symmetric`` store one triangle, which is
    mirrored; ``general`` files must already hold a symmetric matrix.

    Parameters
    ----------
    path : str or Path

    Returns
    -------
    SpdMatrix
        Sparse for coordinate files, dense for array files.

    Raises
    ------
    MatrixMarketError
        On a malformed header or entry line, a non-square size, an index
        out of range, or asymmetric data.
    """
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().split()
        if (len(header) != 5 or header[0].lower() != "%%matrixmarket"
                or header[1].lower() != "matrix"):
            raise MatrixMarketError(f"{path}: malformed MatrixMarket header")
        layout, fld, sym = (h.lower() for h in header[2:])
        if layout not in ("coordinate", "array") or fld not in _FIELDS:
            raise MatrixMarketError(f"{path}: unsupported format {layout} {fld}")
        if sym not in _SYMMETRY:
            raise MatrixMarketError(f"{path}: unsupported symmetry {sym!r}")
        lines = _data_lines(fh)
        try:
            size = [int(v) for v in next(lines).split()]
        except (StopIteration, ValueError) as exc:
            raise MatrixMarketError(f"{path}: missing or malformed size line") from exc
        if layout == "coordinate":
            A = _read_coordinate(path, lines, size, fld, sym)
        else:
            A = _read_array(path, lines, size, fld, sym)
    return A


def _read_coordinate(path, lines, size, fld, sym):
    if len(size) != 3:
        raise MatrixMarketError(f"{path}: coordinate size line needs 3 integers")
    nr, nc, nnz = size
    if nr != nc:
        raise MatrixMarketError(f"{path}: matrix is not square ({nr} x {nc})")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.ones(nnz)
    k = 0
    for line in lines:
        if k >= nnz:
            raise MatrixMarketError(f"{path}: more entries than declared ({nnz})")
        parts = line.split()
        try:
            rows[k], cols[k] = int(parts[0]), int(parts[1])
            if fld != "pattern":
                vals[k] = float(parts[2])
        except (IndexError, ValueError) as exc:
            raise MatrixMarketError(f"{path}: malformed entry {line!r}") from exc
        k += 1
    if k != nnz:
        raise MatrixMarketError(f"{path}: expected {nnz} entries, found {k}")
    if nnz and (rows.min() < 1 or cols.min() < 1 or rows.max() > nr or cols.max() > nc):
        raise MatrixMarketError(f"{path}: index out of range for order {nr}")
    rows -= 1
    cols -= 1
    if sym == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    A = scipy.sparse.coo_array((vals, (rows, cols)), shape=(nr, nc)).tocsr()
    if (A != A.T).nnz:
        raise MatrixMarketError(f"{path}: general storage holds a non-symmetric matrix")
    return SpdMatrix(A)


def _read_array(path, lines, size, fld, sym):
    if len(size) != 2:
        raise MatrixMarketError(f"{path}: array size line needs 2 integers")
    nr, nc = size
    if nr != nc:
        raise MatrixMarketError(f"{path}: matrix is not square ({nr} x {nc})")
    if fld == "pattern":
        raise MatrixMarketError(f"{path}: pattern entries need coordinate layout")
    try:
        vals = np.array([float(line.split()[0]) for line in lines])
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: malformed entry") from exc
    A = np.zeros((nr, nc))
    if sym == "general":
        if vals.size != nr * nc:
            raise MatrixMarketError(f"{path}: expected {nr * nc} entries, found {vals.size}")
        A = vals.reshape(nc, nr).T
        if not np.array_equal(A, A.T):
            raise MatrixMarketError(f"{path}: general storage holds a non-symmetric matrix")
    else:
        need = nr * (nr + 1) // 2
        if vals.size != need:
            raise MatrixMarketError(f"{path}: expected {need} entries, found {vals.size}")
        # column-major lower triangle
        rr, cc = np.triu_indices(nr)
        A[cc, rr] = vals
        A = np.tril(A) + np.tril(A, -1).T
    return SpdMatrix(A)


def write_matrix_market(path, A, comment=None):
    """Write the lower triangle of a symmetric matrix in coordinate format.

    Values are written with 17 significant digits so a read back is exact.
    """
    A = A if isinstance(A, SpdMatrix) else SpdMatrix(A)
    L = scipy.sparse.tril(scipy.sparse.coo_array(A.data)).tocoo()
    order = np.lexsort((L.row, L.col))
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n} {A.n} {L.nnz}\n")
        for k in order:
            fh.write(f"{L.row[k] + 1} {L.col[k] + 1} {L.data[k]:.17g}\n")


def jacobi_precondition(B):
    """Symmetric diagonal scaling ``D^(-1/2) B D^(-1/2)`` with ``D = diag(B)``.

    Returns
    -------
    SpdMatrix
        Unit diagonal, sparse if ``B`` is sparse.
    """
    B = B if isinstance(B, SpdMatrix) else SpdMatrix(B)
    d = B.data.diagonal() if B.is_sparse else np.diag(B.data)
    if np.any(d <= 0):
        raise ValueError("Jacobi scaling needs a positive diagonal")
    s = 1.0 / np.sqrt(d)
    if B.is_sparse:
        D = scipy.sparse.diags_array(s)
        A = D @ B.data @ D
    else:
        A = s[:, None] * B.data * s[None, :]
    return SpdMatrix(A, symmetrize=True)


def _diag_logspace(n, kappa, seed):
    return SpdMatrix(np.diag(np.logspace(0.0, np.log10(kappa), n)))


def _rand_spd(n, kappa, seed):
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    lam = np.logspace(0.0, np.log10(kappa), n)
    return SpdMatrix((Q * lam) @ Q.T, symmetrize=True)


GENERATORS = {
    "diag-logspace": _diag_logspace,
    "rand-spd": _rand_spd,
}


def builtin_matrix(name, n, kappa=1e3, seed=0):
    """Generated SPD test matrix with eigenvalues log-spaced in ``[1, kappa]``.

    Parameters
    ----------
    name : {"diag-logspace", "rand-spd"}
        ``rand-spd`` rotates the spectrum by a Haar-random orthogonal
        matrix drawn from ``seed``.
    n : int
    kappa : float, default 1e3
    seed : int, default 0
    """
    if name not in GENERATORS:
        raise ConfigError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    if n < 1 or not kappa >= 1:
        raise ConfigError("generator needs n >= 1 and kappa >= 1")
    return GENERATORS[name](int(n), float(kappa), int(seed))


def load_matrix(spec):
    """Matrix from ``"gen:<name>:<n>[:<kappa>[:<seed>]]"`` or a MatrixMarket path."""
    spec = str(spec)
    if spec.startswith("gen:"):
        parts = spec.split(":")
        if len(parts) < 3 or len(parts) > 5:
            raise ConfigError(f"bad generator spec {spec!r}")
        try:
            n = int(parts[2])
            kappa = float(parts[3]) if len(parts) > 3 else 1e3
            seed = int(parts[4]) if len(parts) > 4 else 0
        except ValueError as exc:
            raise ConfigError(f"bad generator spec {spec!r}") from exc
        return builtin_matrix(parts[1], n, kappa, seed)
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"matrix file not found: {path}")
    return read_matrix_market(path)
