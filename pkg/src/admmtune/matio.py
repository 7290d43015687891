"""Plain-text matrix, vector, and scalar files.

Format used across the package: first line ``rows cols``, then one line
per row of whitespace-separated decimals.  The writer emits 17 significant
digits so values round-trip exactly.  Vectors are stored as ``n 1``
matrices; scalars as a single line.
"""

import numpy as np


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: first line must be 'rows cols'")
        rows, cols = int(header[0]), int(header[1])
        data = fh.read().split()
    if len(data) != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, got {len(data)}")
    return np.array(data, dtype=float).reshape(rows, cols)


def write_vector(path, v):
    write_matrix(path, np.asarray(v, dtype=float).reshape(-1, 1))


def read_vector(path):
    M = read_matrix(path)
    if 1 not in M.shape:
        raise ValueError(f"{path}: not a vector, shape {M.shape}")
    return M.reshape(-1)


def write_scalar(path, value):
    with open(path, "w") as fh:
        fh.write(f"{float(value):.17g}\n")


def read_scalar(path):
    with open(path) as fh:
        return float(fh.readline().split()[0])
