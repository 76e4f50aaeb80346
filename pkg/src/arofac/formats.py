"""On-disk formats: .t3 text tensors, EEM CSV stacks, factor and sweep CSVs.

All writers go through a temp-file-plus-rename so a crashed run never leaves
a half-written artifact behind. Floats are serialized with shortest
round-trip repr, so write-then-read restores arrays bit for bit.
"""

import csv
import glob as globmod
import json
import os
import re
import tempfile

import numpy as np

from .exceptions import InputError
from .synth import GroundTruth
from .tensor import Factor
from .validation import check_tensor3


def atomic_write_text(path, text):
    """Write text to path via a sibling temp file and atomic rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def write_t3(A, path):
    """Text tensor format: first line `n1 n2 n3`, then values slice by slice
    (k outermost), row-major within each slice. Lines starting with # are
    comments."""
    A = check_tensor3(A)
    n1, n2, n3 = A.shape
    lines = [f"{n1} {n2} {n3}"]
    for k in range(n3):
        for i in range(n1):
            lines.append(" ".join(repr(float(x)) for x in A[i, :, k]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_t3(path):
    try:
        with open(path) as f:
            raw = f.readlines()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    dims = None
    vals = []
    for lineno, line in enumerate(raw, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        toks = s.split()
        if dims is None:
            if len(toks) != 3:
                raise InputError(
                    f"{path}:{lineno}: expected `n1 n2 n3`, got {len(toks)} tokens"
                )
            try:
                dims = tuple(int(t) for t in toks)
            except ValueError as e:
                raise InputError(f"{path}:{lineno}: non-integer dimension") from e
            if min(dims) < 1:
                raise InputError(f"{path}:{lineno}: dimensions must be positive")
            continue
        for off, t in enumerate(toks):
            try:
                vals.append(float(t))
            except ValueError as e:
                raise InputError(
                    f"{path}:{lineno}: non-numeric value at offset {off}"
                ) from e
    if dims is None:
        raise InputError(f"{path}: no dimension line found")
    n1, n2, n3 = dims
    if len(vals) != n1 * n2 * n3:
        raise InputError(
            f"{path}: expected {n1 * n2 * n3} values for {n1}x{n2}x{n3}, "
            f"got {len(vals)}"
        )
    A = np.array(vals).reshape(n3, n1, n2).transpose(1, 2, 0)
    return check_tensor3(A)


def _trailing_int(path):
    m = re.search(r"(\d+)(?=\D*$)", os.path.basename(path))
    return int(m.group(1)) if m else None


def load_eem_csv(path_pattern):
    """Stack per-sample matrix CSVs (emission x excitation) along mode 3.

    Accepts a glob pattern or an explicit list of paths. When every filename
    carries an index number, files are ordered by it and holes in the
    numbering are reported; otherwise lexicographic order applies.
    """
    if isinstance(path_pattern, str):
        paths = sorted(globmod.glob(path_pattern))
        if not paths:
            raise InputError(f"no files match pattern {path_pattern!r}")
    else:
        paths = list(path_pattern)
        for p in paths:
            if not os.path.exists(p):
                raise InputError(f"missing file {p!r}")
    idx = [_trailing_int(p) for p in paths]
    if len(paths) > 1 and all(i is not None for i in idx):
        order = np.argsort(idx)
        paths = [paths[i] for i in order]
        idx = [idx[i] for i in order]
        for a, b, pa, pb in zip(idx, idx[1:], paths, paths[1:]):
            if b - a > 1:
                raise InputError(
                    f"missing sample index {a + 1} between {pa!r} and {pb!r}"
                )
    if len(paths) < 2:
        raise InputError(f"need at least 2 sample files, found {len(paths)}")
    slices = []
    for p in paths:
        rows = []
        with open(p, newline="") as f:
            for rno, row in enumerate(csv.reader(f)):
                cells = [c for c in row if c.strip() != ""]
                if not cells:
                    continue
                out = []
                for cno, c in enumerate(cells):
                    try:
                        out.append(float(c))
                    except ValueError as e:
                        raise InputError(
                            f"{p}: non-numeric cell at row {rno}, column {cno}: {c!r}"
                        ) from e
                rows.append(out)
        if not rows:
            raise InputError(f"{p}: empty file")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise InputError(f"{p}: ragged rows (widths {sorted(widths)})")
        slices.append(np.array(rows))
    shapes = {S.shape for S in slices}
    if len(shapes) != 1:
        raise InputError(
            f"sample shape mismatch across files: {sorted(shapes)}"
        )
    return check_tensor3(np.stack(slices, axis=2))


def write_factor_csvs(factors, out_dir):
    """One CSV per mode with header factor_index,coord_index,value
    (0-based indices). Returns the three paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for mode, attr in ((1, "u"), (2, "v"), (3, "w")):
        lines = ["factor_index,coord_index,value"]
        for l, f in enumerate(factors):
            vec = getattr(f, attr)
            for c, x in enumerate(vec):
                lines.append(f"{l},{c},{float(x)!r}")
        path = os.path.join(out_dir, f"mode{mode}_factors.csv")
        atomic_write_text(path, "\n".join(lines) + "\n")
        paths.append(path)
    return paths


def write_sweep_csv(rows, path):
    """Header eps,seed,detected_rank,min_matched_corr,rel_error; a failed
    cell leaves its result fields empty."""
    lines = ["eps,seed,detected_rank,min_matched_corr,rel_error"]
    for row in rows:
        cells = [repr(float(row["eps"])), str(row["seed"])]
        for key in ("detected_rank", "min_matched_corr", "rel_error"):
            val = row.get(key)
            if val is None:
                cells.append("")
            elif key == "detected_rank":
                cells.append(str(int(val)))
            else:
                cells.append(repr(float(val)))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_truth_json(truth: GroundTruth, spec, path):
    """Ground-truth sidecar next to a generated tensor file."""
    obj = {
        "dims": [spec.n1, spec.n2, spec.n3],
        "rank": spec.r,
        "eps": spec.eps,
        "seed": spec.seed,
        "lambda": truth.lam.tolist(),
        "factors": [
            {"u": f.u.tolist(), "v": f.v.tolist(), "w": f.w.tolist(),
             "weight": f.weight}
            for f in truth.factors
        ],
    }
    atomic_write_json(path, obj)


def read_truth_json(path):
    try:
        with open(path) as f:
            obj = json.load(f)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON: {e}") from e
    try:
        factors = [
            Factor(u=np.array(f["u"], dtype=float),
                   v=np.array(f["v"], dtype=float),
                   w=np.array(f["w"], dtype=float),
                   weight=float(f["weight"]))
            for f in obj["factors"]
        ]
        lam = np.array(obj["lambda"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{path}: malformed ground-truth sidecar: {e}") from e
    return GroundTruth(factors=factors, lam=lam)
