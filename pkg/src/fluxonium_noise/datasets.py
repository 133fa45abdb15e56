"""Typed datasets and CSV ingestion.

CSV schemas (header row required, units in the column names):

* ``t1_flux``:       phi_ext_phi0,t1_us,t1_err_us[,temp_mK][,field_G]
* ``echo``:          slope_ghz_per_phi0,gamma_tilde,gamma_tilde_err[,temp_mK]
* ``spectroscopy``:  phi_ext_phi0,level_i,level_j,freq_ghz
* ``ej_field``:      field_G,ej_ghz[,ej_err_ghz]

Values are converted to internal SI units (seconds, hertz, kelvin) on load;
datasets are written back at full floating precision so a write/read
round-trip reproduces records exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SCHEMAS = ("t1_flux", "echo", "spectroscopy", "ej_field")


@dataclass(frozen=True)
class T1Dataset:
    """Records of (flux bias, T1, uncertainty) with optional T and B columns."""

    phi_ext: np.ndarray  # Phi_0 fraction
    t1: np.ndarray  # s
    sigma: np.ndarray  # s
    temperature: np.ndarray | None = None  # K
    field: np.ndarray | None = None  # G

    def __post_init__(self):
        for name in ("phi_ext", "t1", "sigma"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("temperature", "field"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (len(self.phi_ext) == len(self.t1) == len(self.sigma)):
            raise ValidationError("t1 dataset columns must have equal length")
        if np.any(self.t1 <= 0) or np.any(self.sigma <= 0):
            raise ValidationError("t1 and sigma must be positive")

    def __len__(self) -> int:
        return len(self.t1)

    def select(self, indices) -> "T1Dataset":
        indices = np.asarray(indices)
        return T1Dataset(
            phi_ext=self.phi_ext[indices],
            t1=self.t1[indices],
            sigma=self.sigma[indices],
            temperature=None if self.temperature is None else self.temperature[indices],
            field=None if self.field is None else self.field[indices],
        )


@dataclass(frozen=True)
class SpectroscopyDataset:
    phi_ext: np.ndarray
    level_i: np.ndarray
    level_j: np.ndarray
    freq: np.ndarray  # Hz

    def __len__(self) -> int:
        return len(self.freq)


@dataclass(frozen=True)
class EjFieldDataset:
    field: np.ndarray  # G
    e_j: np.ndarray  # Hz
    sigma: np.ndarray | None = None  # Hz

    def __len__(self) -> int:
        return len(self.field)


@dataclass(frozen=True)
class LoadReport:
    """Rows rejected during ingestion, as (line_number, reason) pairs."""

    rejected: tuple = ()

    def __bool__(self) -> bool:
        return bool(self.rejected)


_HEADERS = {
    "t1_flux": ("phi_ext_phi0", "t1_us", "t1_err_us"),
    "echo": ("slope_ghz_per_phi0", "gamma_tilde", "gamma_tilde_err"),
    "spectroscopy": ("phi_ext_phi0", "level_i", "level_j", "freq_ghz"),
    "ej_field": ("field_G", "ej_ghz"),
}
_OPTIONAL = {
    "t1_flux": ("temp_mK", "field_G"),
    "echo": ("temp_mK",),
    "spectroscopy": (),
    "ej_field": ("ej_err_ghz",),
}


def _read_rows(path, schema):
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = tuple(h.strip() for h in header)
        required = _HEADERS[schema]
        if header[: len(required)] != required:
            raise ValidationError(
                f"{path}: header {','.join(header)!r} does not match the "
                f"{schema!r} schema ({','.join(required)}...)"
            )
        extra = header[len(required) :]
        allowed = _OPTIONAL[schema]
        for col in extra:
            if col not in allowed:
                raise ValidationError(f"{path}: unexpected column {col!r} for schema {schema!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}"
                )
            try:
                rows.append((lineno, [float(c) for c in row]))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return header, rows


def load_dataset(path, schema: str):
    """Load and validate a CSV dataset; returns (dataset, LoadReport).

    Malformed rows raise ValidationError with the offending line number;
    physically invalid rows (non-positive T1 or uncertainty) are dropped and
    reported.
    """
    if schema not in SCHEMAS:
        raise ValidationError(f"unknown schema {schema!r}; choose from {SCHEMAS}")
    header, rows = _read_rows(path, schema)
    rejected = []

    if schema == "t1_flux":
        cols = {name: [] for name in header}
        for lineno, row in rows:
            record = dict(zip(header, row))
            if record["t1_us"] <= 0 or record["t1_err_us"] <= 0:
                rejected.append((lineno, f"non-positive t1 ({record['t1_us']:g} us)"))
                continue
            for name, value in record.items():
                cols[name].append(value)
        ds = T1Dataset(
            phi_ext=np.array(cols["phi_ext_phi0"]),
            t1=np.array(cols["t1_us"]) * 1e-6,
            sigma=np.array(cols["t1_err_us"]) * 1e-6,
            temperature=np.array(cols["temp_mK"]) * 1e-3 if "temp_mK" in cols else None,
            field=np.array(cols["field_G"]) if "field_G" in cols else None,
        )
        return ds, LoadReport(tuple(rejected))

    if schema == "echo":
        from .dephasing import EchoDataset

        slopes, gammas, sigmas, temps = [], [], [], []
        for lineno, row in rows:
            record = dict(zip(header, row))
            if record["gamma_tilde"] <= 0:
                rejected.append((lineno, "non-positive gamma_tilde"))
                continue
            # slope stored as |df01/dPhi| in GHz/Phi_0; convert to rad/s
            slopes.append(2.0 * np.pi * record["slope_ghz_per_phi0"] * 1e9)
            gammas.append(record["gamma_tilde"])
            sigmas.append(record["gamma_tilde_err"])
            if "temp_mK" in record:
                temps.append(record["temp_mK"] * 1e-3)
        ds = EchoDataset(
            slopes=np.array(slopes),
            gamma_tildes=np.array(gammas),
            sigmas=np.array(sigmas),
            temperature=temps[0] if temps else None,
        )
        return ds, LoadReport(tuple(rejected))

    if schema == "spectroscopy":
        data = np.array([row for _, row in rows])
        if data.size == 0:
            raise ValidationError(f"{path}: no data rows")
        ds = SpectroscopyDataset(
            phi_ext=data[:, 0],
            level_i=data[:, 1].astype(int),
            level_j=data[:, 2].astype(int),
            freq=data[:, 3] * 1e9,
        )
        return ds, LoadReport(())

    data = {name: [] for name in header}
    for lineno, row in rows:
        record = dict(zip(header, row))
        if record["ej_ghz"] <= 0:
            rejected.append((lineno, "non-positive ej"))
            continue
        for name, value in record.items():
            data[name].append(value)
    ds = EjFieldDataset(
        field=np.array(data["field_G"]),
        e_j=np.array(data["ej_ghz"]) * 1e9,
        sigma=np.array(data["ej_err_ghz"]) * 1e9 if "ej_err_ghz" in data else None,
    )
    return ds, LoadReport(tuple(rejected))


def save_t1_dataset(path, ds: T1Dataset, comment: str | None = None):
    """Write a t1_flux CSV at full precision (round-trip exact)."""
    header = ["phi_ext_phi0", "t1_us", "t1_err_us"]
    columns = [ds.phi_ext, ds.t1 * 1e6, ds.sigma * 1e6]
    if ds.temperature is not None:
        header.append("temp_mK")
        columns.append(ds.temperature * 1e3)
    if ds.field is not None:
        header.append("field_G")
        columns.append(ds.field)
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([f"{v:.17g}" for v in row])


def save_ej_field_dataset(path, ds: EjFieldDataset, comment: str | None = None):
    header = ["field_G", "ej_ghz"]
    columns = [ds.field, ds.e_j / 1e9]
    if ds.sigma is not None:
        header.append("ej_err_ghz")
        columns.append(ds.sigma / 1e9)
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([f"{v:.17g}" for v in row])
