"""Reading z-scores and converting between t-statistics, z-scores and p-values."""

from __future__ import annotations

import csv
import hashlib
import io
import sys
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .special import student_t_cdf

# smallest lower-tail probability passed to the normal quantile
_TAIL_FLOOR = np.finfo(float).tiny


class ScoreParseError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreColumn:
    values: np.ndarray
    source: str
    label: str
    digest: str = ""

    def __len__(self):
        return self.values.size


def _parse_number(token, lineno):
    tok = token.strip().replace("−", "-")
    try:
        v = float(tok)
    except ValueError:
        raise ScoreParseError(f"line {lineno}: cannot parse {token.strip()!r} as a number") from None
    if not np.isfinite(v):
        raise ScoreParseError(f"line {lineno}: non-finite value {token.strip()!r}")
    return v


def _read_source(source):
    if source is None or source == "-":
        data = sys.stdin.buffer.read()
        name = "<stdin>"
    elif hasattr(source, "read"):
        data = source.read()
        name = getattr(source, "name", "<stream>")
    else:
        with open(source, "rb") as fh:
            data = fh.read()
        name = str(source)
    if isinstance(data, str):
        data = data.encode()
    return data, name


def parse_plain(text):
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        out.append(_parse_number(s, lineno))
    return out


def parse_csv(text, column=None):
    """Parse one column of a comma-separated table.

    ``column`` may be a header name or a 0-based index. A first row is
    treated as a header when ``column`` is a name or when its selected cell
    is not numeric.
    """
    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text)), 1)
            if r and not r[0].lstrip().startswith("#") and any(c.strip() for c in r)]
    if not rows:
        return [], None
    label = None
    idx = 0
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        header = [c.strip() for c in rows[0][1]]
        if column not in header:
            raise ScoreParseError(f"column {column!r} not found in header {header}")
        idx = header.index(column)
        label = column
        rows = rows[1:]
    else:
        idx = int(column) if column is not None else 0
        first = rows[0][1]
        if idx >= len(first):
            raise ScoreParseError(f"column index {idx} out of range")
        try:
            float(first[idx].strip().replace("−", "-"))
        except ValueError:
            label = first[idx].strip()
            rows = rows[1:]
    out = []
    for lineno, r in rows:
        if idx >= len(r):
            raise ScoreParseError(f"line {lineno}: missing column {idx}")
        out.append(_parse_number(r[idx], lineno))
    return out, label


def read_scores(source=None, format="plain", column=None) -> ScoreColumn:
    """Read a column of scores from a path, a file object or stdin (``"-"``)."""
    raw, name = _read_source(source)
    text = raw.decode("utf-8-sig")
    if format == "plain":
        values, label = parse_plain(text), None
    elif format == "csv":
        values, label = parse_csv(text, column)
    else:
        raise ValueError(f"unknown format {format!r}")
    if not values:
        raise ScoreParseError(f"no scores found in {name}")
    return ScoreColumn(np.asarray(values, dtype=float), name, label or name,
                       hashlib.sha256(raw).hexdigest())


def t_to_z(t, nu=100, return_clamped=False):
    """Map t-statistics to z-scores, ``Phi^{-1}(F_nu(t))``.

    The lower tail is used on both sides so the map is exactly odd and keeps
    precision for large ``|t|``. Points whose tail probability underflows
    are clamped; with ``return_clamped`` a boolean mask of them is returned.
    """
    t_arr = np.asarray(t, dtype=float)
    lower = np.asarray(student_t_cdf(-np.abs(t_arr), nu), dtype=float)
    clamped = lower < _TAIL_FLOOR
    z_abs = -sc.ndtri(np.maximum(lower, _TAIL_FLOOR))
    z = np.where(t_arr < 0, -z_abs, z_abs)
    z = np.where(t_arr == 0, 0.0, z)
    if np.ndim(z) == 0:
        z = float(z)
        clamped = bool(clamped)
    return (z, clamped) if return_clamped else z


def z_to_p(z):
    """Two-sided normal p-value ``2 (1 - Phi(|z|))``, floored at the smallest positive double."""
    z_arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z_arr)):
        raise ValueError("z must be finite")
    p = np.maximum(2.0 * sc.ndtr(-np.abs(z_arr)), _TAIL_FLOOR)
    return float(p) if np.ndim(p) == 0 else p
