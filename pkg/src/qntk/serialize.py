"""JSON and CSV serialization for specs, datasets, and matrices.

Complex entries are stored as [re, im] pairs.  CSV floats are written with
repr, which round-trips IEEE-754 doubles exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .encodings import AngleConvention, DiagonalTable, EncodingSpec, PauliZProduct
from .ensemble import Dataset, EnsembleSpec
from .errors import UnsupportedRepresentationError
from .linalg import Observable
from .qnn import QnnParams


def complex_to_pairs(arr: np.ndarray) -> list:
    """Nested lists of [re, im] pairs mirroring the array shape."""
    stacked = np.stack([np.asarray(arr).real, np.asarray(arr).imag], axis=-1)
    return stacked.tolist()


def pairs_to_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def observable_to_dict(obs: Observable) -> dict:
    if obs.pauli_letters is not None:
        return {"kind": "pauli", "letters": obs.pauli_letters}
    if obs.is_diagonal:
        return {"kind": "diagonal", "values": obs.diag.tolist()}
    return {"kind": "dense", "matrix": complex_to_pairs(obs.matrix)}


def observable_from_dict(data: dict) -> Observable:
    kind = data["kind"]
    if kind == "pauli":
        return Observable.pauli(data["letters"])
    if kind == "diagonal":
        return Observable.diagonal(data["values"])
    if kind == "dense":
        return Observable.dense(pairs_to_complex(data["matrix"]))
    raise UnsupportedRepresentationError(f"unknown observable kind {kind!r}")


def encoding_to_dict(spec: EncodingSpec) -> dict:
    if isinstance(spec, PauliZProduct):
        return {
            "kind": "pauli_z_product",
            "n_qubits": spec.n_qubits,
            "convention": spec.convention.value,
        }
    if isinstance(spec, DiagonalTable):
        raise UnsupportedRepresentationError("callable phase tables are not JSON-serializable")
    raise UnsupportedRepresentationError(f"unknown encoding {type(spec).__name__}")


def encoding_from_dict(data: dict) -> EncodingSpec:
    if data["kind"] != "pauli_z_product":
        raise UnsupportedRepresentationError(f"unknown encoding kind {data['kind']!r}")
    return PauliZProduct(n_qubits=data["n_qubits"], convention=AngleConvention(data["convention"]))


def ensemble_to_dict(spec: EnsembleSpec) -> dict:
    return {
        "n_terms": spec.n_terms,
        "dim": spec.dim,
        "weights": spec.weights.tolist(),
        "unitaries_u": complex_to_pairs(spec.unitaries_u),
        "unitaries_w": complex_to_pairs(spec.unitaries_w),
        "observable": observable_to_dict(spec.observable),
        "encoding": encoding_to_dict(spec.encoding),
    }


def ensemble_from_dict(data: dict) -> EnsembleSpec:
    return EnsembleSpec(
        unitaries_u=pairs_to_complex(data["unitaries_u"]),
        unitaries_w=pairs_to_complex(data["unitaries_w"]),
        weights=np.asarray(data["weights"], dtype=float),
        observable=observable_from_dict(data["observable"]),
        encoding=encoding_from_dict(data["encoding"]),
    )


def dataset_to_dict(ds: Dataset) -> dict:
    return {"inputs": ds.inputs.tolist(), "targets": ds.targets.tolist()}


def dataset_from_dict(data: dict) -> Dataset:
    return Dataset(inputs=np.asarray(data["inputs"]), targets=np.asarray(data["targets"]))


def qnn_params_to_dict(params: QnnParams) -> dict:
    return {
        "dim": params.dim,
        "alpha": params.alpha.tolist(),
        "a": params.a.tolist(),
        "gamma": params.gamma.tolist(),
        "delta": params.delta.tolist(),
        "c": params.c.tolist(),
        "dd": params.dd.tolist(),
    }


def qnn_params_from_dict(data: dict) -> QnnParams:
    return QnnParams(
        alpha=np.asarray(data["alpha"]),
        a=np.asarray(data["a"]),
        gamma=np.asarray(data["gamma"]),
        delta=np.asarray(data["delta"]),
        c=np.asarray(data["c"]),
        dd=np.asarray(data["dd"]),
    )


def save_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(
    path: str | Path,
    header: list[str],
    rows,
    preamble: dict | None = None,
) -> None:
    """CSV with an optional '# key=value' preamble and round-trip floats."""
    with open(path, "w", newline="") as fh:
        for key, value in (preamble or {}).items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def write_matrix_csv(path: str | Path, matrix: np.ndarray, preamble: dict | None = None) -> None:
    """Matrix export with generic column names c0..c{n-1}."""
    m = np.asarray(matrix)
    header = [f"c{j}" for j in range(m.shape[1])]
    write_csv(path, header, m, preamble=preamble)


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read back a CSV written by write_csv (preamble lines skipped)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header, data = rows[0], rows[1:]
    return header, np.array([[float(v) for v in row] for row in data])
