"""Rectangular phase-space grids and sampled thermal fields, with CSV/JSON io."""

import json
from dataclasses import dataclass, field

import numpy as np

_trapz = getattr(np, "trapezoid", np.trapz)

__all__ = ["GridSpec", "ThermalField", "grid_integral"]


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (p, q) grid: bounds and point counts per axis."""

    pmin: float
    pmax: float
    qmin: float
    qmax: float
    np_: int
    nq: int

    def __post_init__(self):
        if self.np_ < 2 or self.nq < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not (self.pmax > self.pmin and self.qmax > self.qmin):
            raise ValueError("grid bounds must be increasing")

    @classmethod
    def parse(cls, text):
        """Parse 'pmin,pmax,qmin,qmax,np,nq'."""
        parts = [s.strip() for s in text.split(",")]
        if len(parts) != 6:
            raise ValueError(f"grid spec needs 6 comma-separated values, got {text!r}")
        return cls(*(float(v) for v in parts[:4]), int(parts[4]), int(parts[5]))

    def p_axis(self):
        return np.linspace(self.pmin, self.pmax, self.np_)

    def q_axis(self):
        return np.linspace(self.qmin, self.qmax, self.nq)

    def points(self):
        """All grid points, shape (np*nq, 2), p outer / q fastest."""
        pp, qq = np.meshgrid(self.p_axis(), self.q_axis(), indexing="ij")
        return np.stack([pp.ravel(), qq.ravel()], axis=-1)

    def reshape(self, flat):
        return np.asarray(flat).reshape(self.np_, self.nq)

    def as_dict(self):
        return {
            "pmin": self.pmin,
            "pmax": self.pmax,
            "qmin": self.qmin,
            "qmax": self.qmax,
            "np": self.np_,
            "nq": self.nq,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["pmin"], d["pmax"], d["qmin"], d["qmax"], d["np"], d["nq"])


def grid_integral(grid, values):
    """Trapezoidal integral of ``values`` (shape (np, nq)) over the grid."""
    values = np.asarray(values)
    inner = _trapz(values, grid.q_axis(), axis=1)
    return float(_trapz(inner, grid.p_axis()))


@dataclass
class ThermalField:
    """Per-point values of a (normalized or raw) thermal Wigner function."""

    grid: GridSpec
    values: np.ndarray
    method: str
    beta: float
    hbar: float
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.np_, self.grid.nq)

    def integral(self):
        return grid_integral(self.grid, self.values)

    def normalize(self):
        """Return a copy scaled to unit grid integral."""
        total = self.integral()
        if total <= 0 or not np.isfinite(total):
            raise ValueError(f"cannot normalize field with integral {total}")
        return ThermalField(
            grid=self.grid,
            values=self.values / total,
            method=self.method,
            beta=self.beta,
            hbar=self.hbar,
            normalized=True,
            meta=dict(self.meta),
        )

    def sidecar(self):
        return {
            "method": self.method,
            "beta": self.beta,
            "hbar": self.hbar,
            "grid": self.grid.as_dict(),
            "normalized": self.normalized,
            **({"meta": self.meta} if self.meta else {}),
        }

    def write_csv(self, path):
        """Write `p,q,value` rows (q fastest) plus a `.json` metadata sidecar."""
        points = self.grid.points()
        flat = self.values.ravel()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("p,q,value\n")
            for (p, q), v in zip(points, flat):
                fh.write(f"{p:.17g},{q:.17g},{v:.17g}\n")
        sidecar_path = str(path) + ".json"
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return sidecar_path

    @classmethod
    def read_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        with open(str(path) + ".json", encoding="utf-8") as fh:
            meta = json.load(fh)
        grid = GridSpec.from_dict(meta["grid"])
        return cls(
            grid=grid,
            values=data[:, 2],
            method=meta["method"],
            beta=meta["beta"],
            hbar=meta["hbar"],
            normalized=meta["normalized"],
            meta=meta.get("meta", {}),
        )
