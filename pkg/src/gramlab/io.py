"""CSV file formats (UTF-8, LF, '.' decimal separator, 17 significant digits).

Dissimilarity file: header ``i,j,d``; 0-based integer indices; nonnegative
decimal d in SQUARED scale; comment lines start with '#'.  Labels file:
header ``i,y`` with y in {-1, 1, 0}, 0 meaning unlabeled; objects not listed
stay unlabeled.  Points file: header ``x1,...,xd``.
"""

import numpy as np


def fmt(v):
    return f"{float(v):.17g}"


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _split_header(path, line, lineno, expected=None):
    cols = [c.strip() for c in line.split(",")]
    if expected is not None and cols != list(expected):
        raise ValueError(f"{path}:{lineno}: expected header {','.join(expected)!r}, got {line!r}")
    return cols


def read_dissimilarities(path):
    """Parse (i, j, d) triples; returns (I, J, d) arrays."""
    rows = []
    it = _data_lines(path)
    try:
        lineno, line = next(it)
    except StopIteration:
        raise ValueError(f"{path}: empty dissimilarity file") from None
    _split_header(path, line, lineno, expected=("i", "j", "d"))
    for lineno, line in it:
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        try:
            i, j, d = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
        if d < 0:
            raise ValueError(f"{path}:{lineno}: negative dissimilarity {d}")
        rows.append((i, j, d))
    if not rows:
        raise ValueError(f"{path}: no dissimilarity rows")
    I = np.array([r[0] for r in rows], dtype=int)
    J = np.array([r[1] for r in rows], dtype=int)
    d = np.array([r[2] for r in rows], dtype=float)
    return I, J, d


def write_dissimilarities(path, I, J, d):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("i,j,d\n")
        for i, j, v in zip(I, J, d):
            fh.write(f"{int(i)},{int(j)},{fmt(v)}\n")


def read_labels(path, n):
    """Labels vector of length n; unlisted objects are unlabeled (0)."""
    y = np.zeros(n)
    it = _data_lines(path)
    try:
        lineno, line = next(it)
    except StopIteration:
        raise ValueError(f"{path}: empty labels file") from None
    _split_header(path, line, lineno, expected=("i", "y"))
    for lineno, line in it:
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
        try:
            i, v = int(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
        if not 0 <= i < n:
            raise ValueError(f"{path}:{lineno}: index {i} out of range [0, {n})")
        if v not in (-1.0, 0.0, 1.0):
            raise ValueError(f"{path}:{lineno}: label must be -1, 0 or 1, got {v}")
        y[i] = v
    return y


def write_labels(path, y):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("i,y\n")
        for i, v in enumerate(y):
            fh.write(f"{i},{int(v)}\n")


def read_points(path):
    """Points CSV with header x1,...,xd; returns an (n, d) array."""
    rows = []
    it = _data_lines(path)
    try:
        lineno, line = next(it)
    except StopIteration:
        raise ValueError(f"{path}: empty points file") from None
    cols = _split_header(path, line, lineno)
    want = [f"x{k + 1}" for k in range(len(cols))]
    if cols != want:
        raise ValueError(f"{path}:{lineno}: expected header {','.join(want)!r}, got {line!r}")
    width = len(cols)
    for lineno, line in it:
        parts = line.split(",")
        if len(parts) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: no point rows")
    return np.asarray(rows, dtype=float)


def write_points(path, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(f"x{k + 1}" for k in range(X.shape[1])) + "\n")
        for row in X:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_new_dissimilarities(path):
    """(index, d) pairs for one new object; header ``i,d``."""
    pairs = []
    it = _data_lines(path)
    try:
        lineno, line = next(it)
    except StopIteration:
        raise ValueError(f"{path}: empty file") from None
    _split_header(path, line, lineno, expected=("i", "d"))
    for lineno, line in it:
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
        try:
            pairs.append((int(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if not pairs:
        raise ValueError(f"{path}: no rows")
    return pairs


def write_table(path, header, rows):
    """Generic CSV writer; header is a sequence of names, rows an iterable of
    sequences formatted at full precision (ints stay ints)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) if isinstance(v, (int, np.integer)) else fmt(v) for v in row) + "\n")


def write_embedding(path, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    header = ["i"] + [f"u{k + 1}" for k in range(X.shape[1])]
    write_table(path, header, ([i, *row] for i, row in enumerate(X)))


def write_spectrum(path, values):
    write_table(path, ["nu", "lambda"], ([k + 1, v] for k, v in enumerate(values)))


def write_residuals(path, I, J, d, fitted):
    write_table(
        path,
        ["i", "j", "d", "dhat", "residual"],
        ([int(i), int(j), di, fi, di - fi] for i, j, di, fi in zip(I, J, d, fitted)),
    )
