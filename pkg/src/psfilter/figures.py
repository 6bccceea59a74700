"""Closed-form datasets behind the six summary panels.

Each panel function returns (header, columns, meta): ``header`` is the CSV
header row, ``columns`` a list of equal-length float arrays (x first), and
``meta`` the parameter dictionary reproduced in the JSON sidecar.  Output is
deterministic and floats are serialized with shortest round-trip precision, so
emitted files are byte-identical across runs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .analysis import (
    NoiseGeometry,
    amplification_t_closed,
    max_amplification,
    max_amplification_vs_noiseless,
)
from .errors import InvalidInputError
from .optimize import optimize_ds

DEFAULT_EPS_SERIES = (0.01, 0.1, 0.3, 0.5, 0.8)
DEFAULT_PMAX_SERIES = (0.05, 0.1, 0.2, 0.5, 0.8)
DEFAULT_DU_PAIRS = ((2, 2), (10, 2), (10, 5), (20, 10))
PANEL_IDS = ("3a", "3b", "3c", "3d", "3e", "3f")


def _amp_vs_t2(d: int, u: int, t2_max: float, n: int, eps_series) -> tuple[list, list, dict]:
    x = np.linspace(1e-3, t2_max, n)
    header = ["t2"]
    cols = [x]
    for eps in eps_series:
        geom = NoiseGeometry(eps=eps, d=d, u=u)
        header.append(f"A[eps={eps:g},d={d},u={u}]")
        cols.append(amplification_t_closed(geom, x))
    meta = {"x": "t2", "d": d, "u": u, "eps_series": list(eps_series),
            "t2_range": [1e-3, t2_max], "n": n}
    return header, cols, meta


def panel_3a(eps_series=DEFAULT_EPS_SERIES, n: int = 400):
    """Amplification vs t^2 for a qubit-like geometry (d = u = 2)."""
    return _amp_vs_t2(2, 2, 1.0, n, eps_series)


def panel_3b(eps_series=DEFAULT_EPS_SERIES, n: int = 400):
    """Amplification vs t^2 for d = 10, u = 5 (the peak can sit beyond t = 1)."""
    return _amp_vs_t2(10, 5, 2.0, n, eps_series)


def _eps_axis(n: int) -> np.ndarray:
    # start above 0 (peak amplification diverges there) and end exactly at 1
    return np.linspace(0.01, 1.0, n)


def panel_3c(du_pairs=DEFAULT_DU_PAIRS, n: int = 200):
    """Peak amplification vs eps, measured against the equally noisy state."""
    x = _eps_axis(n)
    header = ["eps"]
    cols = [x]
    for d, u in du_pairs:
        header.append(f"Amax[d={d},u={u}]")
        cols.append(np.array([max_amplification(NoiseGeometry(e, d, u)) for e in x]))
    meta = {"x": "eps", "baseline": "noisy", "du_pairs": [list(p) for p in du_pairs], "n": n}
    return header, cols, meta


def panel_3d(du_pairs=DEFAULT_DU_PAIRS, n: int = 200):
    """Peak amplification vs eps, measured against the noiseless state."""
    x = _eps_axis(n)
    header = ["eps"]
    cols = [x]
    for d, u in du_pairs:
        header.append(f"Amax[d={d},u={u}]")
        cols.append(np.array([max_amplification_vs_noiseless(NoiseGeometry(e, d, u))
                              for e in x]))
    meta = {"x": "eps", "baseline": "noiseless", "du_pairs": [list(p) for p in du_pairs],
            "n": n}
    return header, cols, meta


def _efficiency_panel(du_pairs, pmax_series, n: int):
    x = np.linspace(0.0, 1.0, n)
    header = ["eps"]
    cols = [x]
    for d, u in du_pairs:
        for pmax in pmax_series:
            header.append(f"eta[pmax={pmax:g},d={d},u={u}]")
            cols.append(np.array([
                optimize_ds(NoiseGeometry(e, d, u), pmax).predicted_efficiency for e in x]))
    for pmax in pmax_series:
        header.append(f"naive[pmax={pmax:g}]")
        cols.append(np.full_like(x, pmax))
    meta = {"x": "eps", "du_pairs": [list(p) for p in du_pairs],
            "pmax_series": list(pmax_series), "n": n}
    return header, cols, meta


def panel_3e(pmax_series=DEFAULT_PMAX_SERIES, n: int = 201):
    """Constrained efficiency vs eps with naive-attenuation comparison columns.

    Emits both published parameterizations (d = u = 2 and d = 10, u = 5) as
    separately labeled series.
    """
    return _efficiency_panel(((2, 2), (10, 5)), pmax_series, n)


def panel_3f(pmax_series=DEFAULT_PMAX_SERIES, n: int = 201):
    """Same as panel 3e restricted to d = 10, u = 5."""
    return _efficiency_panel(((10, 5),), pmax_series, n)


_PANELS = {"3a": panel_3a, "3b": panel_3b, "3c": panel_3c,
           "3d": panel_3d, "3e": panel_3e, "3f": panel_3f}


def panel_data(panel: str, **kwargs):
    try:
        fn = _PANELS[panel]
    except KeyError:
        raise InvalidInputError(f"unknown panel {panel!r}; expected one of {PANEL_IDS}")
    return fn(**kwargs)


def format_csv(header, cols) -> str:
    lines = [",".join(header)]
    rows = np.column_stack(cols)
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_panel(panel: str, out_path, version: str, **kwargs) -> Path:
    """Emit <out>.csv and a <out>.meta.json sidecar with the full parameter set."""
    header, cols, meta = panel_data(panel, **kwargs)
    out = Path(out_path)
    out.write_text(format_csv(header, cols))
    sidecar = {"panel": panel, "tool": "psfilter", "version": version, "columns": header,
               "parameters": meta}
    sidecar_path = out.with_suffix(out.suffix + ".meta.json") if out.suffix != ".csv" \
        else out.with_name(out.stem + ".meta.json")
    sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return out


def read_csv(path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text().strip().split("\n")
    header = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return header, data
