"""Multi-panel rendering of solver diagnostics CSVs.

Reads the diagnostics schema written by the solver runs (one row per output
time) and draws the electric-energy history plus the invariant-error panels,
one curve per labeled CSV, all on log y-axes.
"""

from dataclasses import dataclass

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

EXPECTED_COLUMNS = (
    "t",
    "electric_energy",
    "mass",
    "momentum",
    "energy",
    "l2",
    "mass_err",
    "momentum_err",
    "energy_err",
    "l2_err",
)

# panels drawn below the electric-energy history
ERROR_PANELS = (
    ("mass_err", "mass error"),
    ("momentum_err", "momentum error"),
    ("energy_err", "energy error"),
    ("l2_err", "L2 norm error"),
)

LOG_FLOOR = 1e-16


class SchemaError(ValueError):
    """A diagnostics CSV does not match the expected schema."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: labeled CSVs, the panel list and the output path."""

    inputs: tuple          # ((csv_path, label), ...)
    out_path: str
    panels: tuple = ERROR_PANELS
    log_energy: bool = True
    title: str = ""


def load_diagnostics(path) -> dict:
    """Parse one diagnostics CSV into column arrays, validating the schema."""
    with open(path) as fh:
        header = fh.readline().strip()
        names = tuple(header.split(","))
        for col in EXPECTED_COLUMNS:
            if col not in names:
                raise SchemaError(f"{path}: missing column '{col}'")
        for col in names:
            if col not in EXPECTED_COLUMNS:
                raise SchemaError(f"{path}: unexpected column '{col}'")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != len(names):
                raise SchemaError(
                    f"{path}:{lineno}: expected {len(names)} fields, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: non-numeric field ({exc})") from exc
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(names)}


def _clipped(values: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(values), LOG_FLOOR)


def render(spec: FigureSpec):
    """Draw the figure and write it to spec.out_path; returns the Figure."""
    curves = [(label, load_diagnostics(path)) for path, label in spec.inputs]

    n_err = len(spec.panels)
    ncols = 2
    nrows = 1 + (n_err + ncols - 1) // ncols
    fig = plt.figure(figsize=(11, 3.2 * nrows))
    gs = fig.add_gridspec(nrows, ncols)

    ax_e = fig.add_subplot(gs[0, :])
    for label, data in curves:
        ax_e.plot(data["t"], _clipped(data["electric_energy"]), label=label, lw=1.2)
    if spec.log_energy:
        ax_e.set_yscale("log")
    ax_e.set_xlabel("t")
    ax_e.set_ylabel("electric energy")
    ax_e.legend(loc="lower right", fontsize=9)
    if spec.title:
        ax_e.set_title(spec.title)

    for k, (column, label_text) in enumerate(spec.panels):
        ax = fig.add_subplot(gs[1 + k // ncols, k % ncols])
        for label, data in curves:
            ax.plot(data["t"], _clipped(data[column]), label=label, lw=1.0)
        ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel(label_text)

    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    return fig
