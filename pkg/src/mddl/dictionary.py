"""Labeled atom matrices: validation, normalisation, assembly, disk formats.

A `Dictionary` holds ``n * s`` atoms of dimension ``d`` for ``n`` classes
observed under ``s`` style domains (domain 0 is the source domain).  Atoms
are ordered class-major / domain-minor: atom (class k, domain l) lives in
column ``k * s + l``, so each class occupies a contiguous block of columns
and the per-query weighting stays an index-range affair.

On disk a dictionary is a JSON manifest next to one binary matrix file per
domain.  The binary format is a 16-byte header -- magic ``MDDL``, format
version, rows, cols as little-endian u32 -- followed by rows*cols IEEE-754
float64 little-endian values in column-major order.
"""

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"MDDL"
FORMAT_VERSION = 1
MANIFEST_VERSION = 1

_HEADER = struct.Struct("<4sIII")

UNIT_NORM_ATOL = 1e-9


class DictionaryFormatError(ValueError):
    """Raised for malformed manifests or matrix files."""


@dataclass(frozen=True)
class Dictionary:
    """Immutable labeled atom matrix.

    Parameters
    ----------
    data : ndarray, shape (d, n*s)
        Atom columns, class-major / domain-minor.  Stored as float64 and
        marked read-only, so instances are safe to share across threads.
    class_labels : tuple of str
    domain_labels : tuple of str
        Domain 0 is the source domain.
    normalized : bool
        Records whether every column is unit L2 norm.
    """

    data: np.ndarray
    class_labels: tuple
    domain_labels: tuple
    normalized: bool = False

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"dictionary data must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "class_labels", tuple(str(c) for c in self.class_labels))
        object.__setattr__(self, "domain_labels", tuple(str(t) for t in self.domain_labels))
        d, cols = arr.shape
        n, s = len(self.class_labels), len(self.domain_labels)
        if d < 1 or n < 1 or s < 1:
            raise ValueError(f"d, n and s must all be positive (d={d}, n={n}, s={s})")
        if cols != n * s:
            raise ValueError(f"expected {n}*{s}={n * s} atom columns, got {cols}")
        if len(set(self.class_labels)) != n:
            raise ValueError("class labels must be distinct")
        if len(set(self.domain_labels)) != s:
            raise ValueError("domain labels must be distinct")
        if self.normalized:
            norms = np.linalg.norm(arr, axis=0)
            if np.any(np.abs(norms - 1.0) > UNIT_NORM_ATOL):
                bad = int(np.argmax(np.abs(norms - 1.0)))
                raise ValueError(
                    f"normalized flag set but atom column {bad} has norm {norms[bad]!r}"
                )
        arr.setflags(write=False)

    @property
    def d(self):
        return self.data.shape[0]

    @property
    def n(self):
        return len(self.class_labels)

    @property
    def s(self):
        return len(self.domain_labels)

    def atom(self, k, l):
        """Atom of class ``k`` under domain ``l`` (read-only view)."""
        if not (0 <= k < self.n and 0 <= l < self.s):
            raise IndexError(f"atom ({k}, {l}) out of range for n={self.n}, s={self.s}")
        return self.data[:, k * self.s + l]

    def class_block(self, k):
        """The (d, s) block of all atoms of class ``k``."""
        if not 0 <= k < self.n:
            raise IndexError(f"class {k} out of range for n={self.n}")
        return self.data[:, k * self.s:(k + 1) * self.s]

    def domain_block(self, l):
        """The (d, n) matrix of all atoms drawn from domain ``l``."""
        if not 0 <= l < self.s:
            raise IndexError(f"domain {l} out of range for s={self.s}")
        return np.ascontiguousarray(self.data[:, l::self.s])


def check_query(dic, q):
    """Validate a query vector against a dictionary, returning it as float64."""
    arr = np.asarray(q, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"query must be a 1-D vector, got shape {arr.shape}")
    if arr.shape[0] != dic.d:
        raise ValueError(f"query length {arr.shape[0]} does not match dictionary d={dic.d}")
    return arr


def normalize_atoms(dic):
    """Rescale every atom to unit L2 norm.

    Raises ValueError naming the offending (class, domain) pair if an atom is
    the zero vector.  Idempotent up to floating-point rounding.
    """
    norms = np.linalg.norm(dic.data, axis=0)
    if np.any(norms == 0.0):
        flat = int(np.argmin(norms))
        k, l = divmod(flat, dic.s)
        raise ValueError(
            f"cannot normalize zero atom (class {dic.class_labels[k]!r}, "
            f"domain {dic.domain_labels[l]!r})"
        )
    return Dictionary(
        data=dic.data / norms,
        class_labels=dic.class_labels,
        domain_labels=dic.domain_labels,
        normalized=True,
    )


def assemble_miscellaneous(source, transferred):
    """Merge a source dictionary with style-transferred dictionaries.

    All inputs must be single-domain (s=1) with identical feature dimension
    and class labels in identical order; domain labels must be pairwise
    distinct.  The result keeps class-major ordering: atom (k, 0) is the
    source atom of class k, atom (k, l) for l >= 1 comes from
    ``transferred[l-1]``.
    """
    parts = [source] + list(transferred)
    for p in parts:
        if p.s != 1:
            raise ValueError(f"assembly inputs must have s=1, got s={p.s} for {p.domain_labels}")
        if p.d != source.d:
            raise ValueError(f"feature dimension mismatch: {p.d} != {source.d}")
        if p.class_labels != source.class_labels:
            raise ValueError("class labels must match the source dictionary in identical order")
    domain_labels = [p.domain_labels[0] for p in parts]
    if len(set(domain_labels)) != len(domain_labels):
        raise ValueError(f"duplicate domain labels in assembly: {domain_labels}")
    s = len(parts)
    n, d = source.n, source.d
    data = np.empty((d, n * s))
    for l, p in enumerate(parts):
        data[:, l::s] = p.data
    return Dictionary(data=data, class_labels=source.class_labels,
                      domain_labels=domain_labels)


def extract_domain(dic, l):
    """The single-domain (s=1) dictionary of all atoms from domain ``l``."""
    return Dictionary(
        data=dic.domain_block(l),
        class_labels=dic.class_labels,
        domain_labels=(dic.domain_labels[l],),
        normalized=dic.normalized,
    )


def _write_matrix(path, arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, rows, cols))
        fh.write(arr.tobytes(order="F"))


def _read_matrix(path):
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DictionaryFormatError(f"cannot read matrix file {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise DictionaryFormatError(f"{path}: truncated header")
    magic, version, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DictionaryFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise DictionaryFormatError(f"{path}: unsupported format version {version}")
    if rows < 1 or cols < 1:
        raise DictionaryFormatError(f"{path}: non-positive matrix shape {rows}x{cols}")
    expected = _HEADER.size + 8 * rows * cols
    if len(blob) != expected:
        raise DictionaryFormatError(
            f"{path}: payload is {len(blob)} bytes, expected {expected} for {rows}x{cols}"
        )
    flat = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    return flat.reshape((rows, cols), order="F").copy()


def save_dictionary(dic, path):
    """Write ``dic`` as a manifest plus one matrix file per domain.

    The matrix files land next to the manifest as ``<stem>_d<l>.bin`` and the
    payload round-trips bit-exactly through `load_dictionary`.
    """
    path = Path(path)
    stem = path.stem if path.suffix else path.name
    data_files = {}
    for l, label in enumerate(dic.domain_labels):
        fname = f"{stem}_d{l:02d}.bin"
        _write_matrix(path.parent / fname, dic.domain_block(l))
        data_files[label] = fname
    manifest = {
        "version": MANIFEST_VERSION,
        "d": dic.d,
        "n": dic.n,
        "s": dic.s,
        "normalized": dic.normalized,
        "class_labels": list(dic.class_labels),
        "domain_labels": list(dic.domain_labels),
        "data_files": data_files,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load_dictionary(path):
    """Load a dictionary manifest written by `save_dictionary` (or by hand).

    Class-major / domain-minor atom ordering is enforced from the manifest's
    declared label order regardless of file layout on disk.
    """
    path = Path(path)
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise DictionaryFormatError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DictionaryFormatError(f"manifest {path} is not valid JSON: {exc}") from exc

    for key in ("version", "d", "n", "s", "class_labels", "domain_labels", "data_files"):
        if key not in manifest:
            raise DictionaryFormatError(f"manifest {path} is missing field {key!r}")
    if manifest["version"] != MANIFEST_VERSION:
        raise DictionaryFormatError(f"unsupported manifest version {manifest['version']}")
    d, n, s = manifest["d"], manifest["n"], manifest["s"]
    class_labels = [str(c) for c in manifest["class_labels"]]
    domain_labels = [str(t) for t in manifest["domain_labels"]]
    if d < 1 or n < 1 or s < 1:
        raise DictionaryFormatError(f"manifest declares non-positive sizes d={d}, n={n}, s={s}")
    if len(class_labels) != n:
        raise DictionaryFormatError(f"manifest declares n={n} but lists {len(class_labels)} classes")
    if len(domain_labels) != s:
        raise DictionaryFormatError(f"manifest declares s={s} but lists {len(domain_labels)} domains")
    if len(set(domain_labels)) != s:
        raise DictionaryFormatError(f"duplicate domain labels in manifest: {domain_labels}")
    data_files = manifest["data_files"]
    missing = [t for t in domain_labels if t not in data_files]
    if missing:
        raise DictionaryFormatError(f"manifest lists no data file for domains {missing}")
    extra = [t for t in data_files if t not in domain_labels]
    if extra:
        raise DictionaryFormatError(f"manifest has data files for undeclared domains {extra}")

    data = np.empty((d, n * s))
    for l, label in enumerate(domain_labels):
        block = _read_matrix(path.parent / data_files[label])
        if block.shape != (d, n):
            raise DictionaryFormatError(
                f"domain {label!r}: matrix is {block.shape[0]}x{block.shape[1]}, "
                f"manifest declares {d}x{n}"
            )
        data[:, l::s] = block
    return Dictionary(
        data=data,
        class_labels=class_labels,
        domain_labels=domain_labels,
        normalized=bool(manifest.get("normalized", False)),
    )


def load_csv(path, domain_label="source"):
    """Import a small hand-made fixture: header row of class labels, one
    feature per data row.  Yields a single-domain dictionary."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = [row for row in reader if row]
    except OSError as exc:
        raise DictionaryFormatError(f"cannot read CSV {path}: {exc}") from exc
    if len(rows) < 2:
        raise DictionaryFormatError(f"CSV {path} needs a header row and at least one feature row")
    header = [c.strip() for c in rows[0]]
    n = len(header)
    data = np.empty((len(rows) - 1, n))
    for i, row in enumerate(rows[1:]):
        if len(row) != n:
            raise DictionaryFormatError(
                f"CSV {path} row {i + 2} has {len(row)} values, expected {n}"
            )
        try:
            data[i] = [float(v) for v in row]
        except ValueError as exc:
            raise DictionaryFormatError(f"CSV {path} row {i + 2}: {exc}") from exc
    return Dictionary(data=data, class_labels=header, domain_labels=(domain_label,))


def read_matrix_file(path):
    """Read a batch of column vectors from a CSV (rows = features) or an
    ``MDDL`` binary matrix file, picked by sniffing the magic bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return _read_matrix(path)
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DictionaryFormatError(f"{path}: empty vector file")
    try:
        return np.asarray([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise DictionaryFormatError(f"{path}: {exc}") from exc


def read_vector_file(path):
    """Read a single query vector (one CSV column/row or a 1-column matrix)."""
    arr = read_matrix_file(path)
    if arr.ndim == 2:
        if 1 in arr.shape:
            return arr.reshape(-1)
        raise DictionaryFormatError(f"{path}: expected a single vector, got shape {arr.shape}")
    return arr
