"""Dataset cache format: matrix containers plus a JSON truth sidecar.

A matrix file is one ASCII header line ``matrix <rows> <cols> <dtype>``
followed by the raw row-major bytes (dtype strings are numpy's explicit
forms, e.g. ``<f8``).  An instance directory holds the design/sample
matrices, the response when the model has one, and ``truth.json`` with
the generating seed and the ground-truth support and values.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .datagen import ProblemInstance, TruthSpec
from .objectives import IsingObjective, LogisticObjective, QuadraticObjective
from .types import ParamVector, SupportSet

_MAGIC = "matrix"


def save_matrix(path: str | Path, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(np.atleast_2d(arr))
    if arr.ndim != 2:
        raise ValueError("only 1-d or 2-d arrays are supported")
    header = f"{_MAGIC} {arr.shape[0]} {arr.shape[1]} {arr.dtype.str}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(arr.tobytes(order="C"))


def load_matrix(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 4 or header[0] != _MAGIC:
            raise ValueError(f"{path}: not a matrix container")
        rows, cols = int(header[1]), int(header[2])
        dtype = np.dtype(header[3])
        data = fh.read()
    expected = rows * cols * dtype.itemsize
    if len(data) != expected:
        raise ValueError(f"{path}: payload is {len(data)} bytes, expected {expected}")
    return np.frombuffer(data, dtype=dtype).reshape(rows, cols).copy()


def save_instance(inst: ProblemInstance, directory: str | Path) -> None:
    """Write an instance to a directory for caching and cross-run reuse."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    truth = inst.truth
    sidecar = {
        "model": inst.model,
        "n": inst.n,
        "seed": inst.seed,
        "p": truth.p,
        "s_true": truth.s_true,
        "support": list(truth.support.indices),
        "signal_values": [float(truth.theta_star.values[j]) for j in truth.support],
        "admissible_magnitudes": list(truth.signal_values),
        "vartheta": truth.vartheta,
        "meta": inst.meta,
    }
    obj = inst.objective
    if isinstance(obj, (QuadraticObjective, LogisticObjective)):
        save_matrix(directory / "X.mat", obj.X)
        save_matrix(directory / "y.mat", obj.y)
    elif isinstance(obj, IsingObjective):
        save_matrix(directory / "samples.mat", obj.X.astype(np.int8))
    else:
        raise ValueError(f"cannot serialize objective of type {type(obj).__name__}")
    with open(directory / "truth.json", "w", encoding="ascii") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_instance(directory: str | Path) -> ProblemInstance:
    directory = Path(directory)
    with open(directory / "truth.json", encoding="ascii") as fh:
        sidecar = json.load(fh)
    p = int(sidecar["p"])
    support = SupportSet.from_iterable(sidecar["support"], p)
    theta = np.zeros(p)
    for j, v in zip(sidecar["support"], sidecar["signal_values"]):
        theta[int(j)] = float(v)
    truth = TruthSpec(
        p=p,
        s_true=int(sidecar["s_true"]),
        signal_values=tuple(sidecar["admissible_magnitudes"]),
        support=support,
        theta_star=ParamVector(theta, support),
        vartheta=float(sidecar["vartheta"]),
    )
    model = sidecar["model"]
    if model == "linear":
        obj = QuadraticObjective(load_matrix(directory / "X.mat"),
                                 load_matrix(directory / "y.mat").ravel())
    elif model == "logistic":
        obj = LogisticObjective(load_matrix(directory / "X.mat"),
                                load_matrix(directory / "y.mat").ravel())
    elif model == "ising":
        obj = IsingObjective(load_matrix(directory / "samples.mat").astype(float))
    else:
        raise ValueError(f"unknown model {model!r} in sidecar")
    return ProblemInstance(
        model=model,
        objective=obj,
        truth=truth,
        n=int(sidecar["n"]),
        seed=int(sidecar["seed"]),
        meta=dict(sidecar.get("meta", {})),
    )
