"""CSV tables with unit-bearing headers plus a two-column ``.xy`` companion for plotting."""
from __future__ import annotations

import csv
import dataclasses
import io
from pathlib import Path

import numpy as np

from .analysis import PeakRecord
from .dynamics import DepositionHistogram
from .potential import ExtremumRecord, PotentialSamples


class ExportError(OSError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return "" if v is None else str(v)


def _table(obj):
    """(header, rows, xy-columns or None) for a supported object."""
    if isinstance(obj, DepositionHistogram):
        header = ["x(um)", "count"]
        x = obj.centers * 1e6
        rows = list(zip(x, obj.counts))
        return header, rows, (x, obj.counts)
    if isinstance(obj, PotentialSamples):
        header = ["x(um)", "V_ni(J)", "V_in(J)", "V(J)"]
        x = obj.x * 1e6
        rows = list(zip(x, obj.V_ni, obj.V_in, obj.V))
        return header, rows, (x, obj.V)
    if isinstance(obj, (list, tuple)):
        if not obj:
            raise ValueError("nothing to export")
        first = obj[0]
        if isinstance(first, ExtremumRecord):
            header = ["x(um)", "V(J)", "kind", "curvature(J/m^2)"]
            rows = [(e.x * 1e6, e.value, e.kind, e.curvature) for e in obj]
            return header, rows, None
        if isinstance(first, PeakRecord):
            header = ["position(um)", "height(count)", "fwhm(nm)", "background(count)", "contrast"]
            rows = [(p.position * 1e6, p.height, p.fwhm * 1e9, p.background, p.contrast) for p in obj]
            return header, rows, None
        if isinstance(first, dict):
            header = list(first)
            return header, [[d[k] for k in header] for d in obj], None
    if dataclasses.is_dataclass(obj):
        d = dataclasses.asdict(obj)
        return ["key", "value"], list(d.items()), None
    if isinstance(obj, dict):
        return ["key", "value"], list(obj.items()), None
    raise TypeError(f"don't know how to export {type(obj).__name__}")


def render_table(obj) -> str:
    header, rows, _ = _table(obj)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def export_table(obj, destination) -> list[Path]:
    """Write ``destination`` (CSV) and, for series data, ``destination.xy``.

    Returns the paths written.  Output depends only on the object, so
    re-exporting the same object gives byte-identical files.
    """
    dest = Path(destination)
    header, rows, xy = _table(obj)
    text = render_table(obj)
    written = [dest]
    try:
        dest.write_text(text)
        if xy is not None:
            xy_path = dest.with_suffix(dest.suffix + ".xy")
            lines = [f"# {header[0]} {header[-1]}"]
            lines += [f"{_fmt(a)} {_fmt(b)}" for a, b in zip(*xy)]
            xy_path.write_text("\n".join(lines) + "\n")
            written.append(xy_path)
    except OSError as exc:
        raise ExportError(f"cannot write {dest}: {exc.strerror or exc}") from exc
    return written
