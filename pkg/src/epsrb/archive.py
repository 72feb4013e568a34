"""Reduced-basis archives.

An archive is a zip file with

``meta.json``
    format tag, fingerprints of G_X, G_Y and the family definition, selected
    pairs, greedy history, training grid and the array layout;
``snapshots.bin``, ``ortho.bin``
    basis vectors as raw little-endian float64, row-major with one vector per
    row (shape ``(m, dim)``).
"""

import json
import zipfile

import numpy as np

from .exceptions import ArchiveMismatch
from .greedy import ReducedBasis

__all__ = ["save_basis", "load_basis", "read_metadata", "FORMAT"]

FORMAT = "epsrb-basis/1"
_ARRAYS = ("snapshots", "ortho")


def _fingerprints(family):
    return {
        "gram_x": family.domain.fingerprint(),
        "gram_y": family.codomain.fingerprint(),
        "family": family.fingerprint(),
    }


def save_basis(basis, family, path, training=None, extra=None):
    """Write ``basis`` to ``path``.

    ``training`` (nu points, eta points, eta interval) and ``extra`` are stored
    verbatim in the metadata and must be JSON-serializable.
    """
    dim = family.codomain.dim
    meta = {
        "format": FORMAT,
        "hashes": _fingerprints(family),
        "family": family.description(),
        "dim": dim,
        "m": basis.size,
        "delta": basis.delta,
        "converged": basis.converged,
        "projection": basis.projection,
        "history": [float(h) for h in basis.history],
        "selected": [{"nu": np.asarray(nu).tolist(), "eta": float(eta)} for nu, eta in basis.selected],
        "training": training or {},
        "extra": extra or {},
        "arrays": {
            name: {"file": f"{name}.bin", "dtype": "<f8", "order": "row-major", "shape": [basis.size, dim]}
            for name in _ARRAYS
        },
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("meta.json", json.dumps(meta, indent=2, sort_keys=True))
        for name in _ARRAYS:
            rows = np.ascontiguousarray(getattr(basis, name).T, dtype="<f8")
            zf.writestr(f"{name}.bin", rows.tobytes(order="C"))


def read_metadata(path):
    with zipfile.ZipFile(path) as zf:
        meta = json.loads(zf.read("meta.json"))
    if meta.get("format") != FORMAT:
        raise ArchiveMismatch(f"unsupported archive format {meta.get('format')!r}")
    return meta


def load_basis(path, family):
    """Read an archive, checking it was trained on ``family``.

    Raises
    ------
    ArchiveMismatch
        If any stored fingerprint differs from the family's.
    """
    meta = read_metadata(path)
    expected = _fingerprints(family)
    stale = [k for k, v in expected.items() if meta["hashes"].get(k) != v]
    if stale:
        raise ArchiveMismatch(f"archive does not match the family ({', '.join(stale)} differ)")
    arrays = {}
    with zipfile.ZipFile(path) as zf:
        for name in _ARRAYS:
            spec = meta["arrays"][name]
            data = np.frombuffer(zf.read(spec["file"]), dtype=spec["dtype"])
            arrays[name] = data.reshape(spec["shape"]).T.astype(float)
    selected = [(np.asarray(s["nu"], dtype=float), float(s["eta"])) for s in meta["selected"]]
    basis = ReducedBasis(
        selected=selected,
        snapshots=arrays["snapshots"],
        ortho=arrays["ortho"],
        history=list(meta["history"]),
        delta=float(meta["delta"]),
        converged=bool(meta["converged"]),
        projection=meta["projection"],
        metadata={"training": meta["training"], "extra": meta["extra"]},
    )
    return basis
