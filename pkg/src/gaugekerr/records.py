"""Time-series records of ensemble observables and their CSV/JSON forms."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

FIELDS = (
    "tau",
    "X_mean",
    "X_err",
    "Y_mean",
    "Y_err",
    "n_mean",
    "n_err",
    "norm",
    "diverged_count",
    "env_mean",
    "env_err",
)


@dataclass
class RunRecord:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, row):
        missing = set(FIELDS) - set(row)
        if missing:
            raise ValueError(f"row lacks {sorted(missing)}")
        self.rows.append({k: row[k] for k in FIELDS})

    def extend(self, other):
        for row in other.rows:
            self.append(row)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)

    @property
    def last(self):
        return self.rows[-1]

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for r in self.rows:
            w.writerow([repr(int(r[k])) if k == "diverged_count" else repr(float(r[k])) for k in FIELDS])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    @classmethod
    def read_csv(cls, path):
        rec = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                rec.append({k: (int(v) if k == "diverged_count" else float(v)) for k, v in row.items()})
        return rec

    def write_json(self, path, extra=None):
        payload = dict(self.metadata)
        if extra:
            payload.update(extra)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialise {type(x).__name__}")
