"""Small file helpers: atomic writes and sparse/CSV exports."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def atomic_write_text(path, text: str) -> Path:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header: list[str], rows) -> Path:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def export_coo(path, mat) -> Path:
    """Sparse matrix as 0-based `row col value` triplets."""
    A = sp.coo_matrix(mat)
    lines = [f"{i} {j} {v!r}" for i, j, v in zip(A.row.tolist(), A.col.tolist(), A.data.tolist())]
    return atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def export_diagonal(path, diag) -> Path:
    d = np.asarray(diag, dtype=float)
    return export_coo(path, sp.diags(d))
