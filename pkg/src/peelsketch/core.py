"""Problem parameters, vectors, tail norms and the heavy/light classification.

Everything downstream (hash plans, sketch blocks, the decoder and the
white-box test oracles) takes a :class:`Params` instance.  Sizes are derived
deterministically from ``(n, k, eps, c, profile)``; the two profiles differ
only in their multiplicative constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np


class ParameterError(ValueError):
    """Raised for out-of-range or inconsistent parameters."""


class DimensionError(ParameterError):
    """Raised when a vector does not match the configured dimension."""


EXACT = "exact"
"""Marker returned by :func:`error_ratio` when both x - x' and the tail vanish."""


def log2n(n: int) -> int:
    """ceil(log2 n), floored at 1 so that n = 1 still gets one row/bit."""
    return max(1, (int(n) - 1).bit_length())


@dataclass(frozen=True)
class Profile:
    """Multiplicative constants for one construction profile.

    Sizes derived from a profile (``lg = ceil(log2 n)``):

    * buckets ``B = ceil(bucket_mult * c * k / eps)``
    * Count-Sketch rows ``r = cs_row_mult * lg`` and buckets
      ``s = ceil(cs_bucket_mult * c * k / eps)``
    * code length ``L = code_mult * lg``
    * tail repetitions ``R = tail_rep_mult * lg``
    """

    name: str
    bucket_mult: float
    cs_row_mult: int
    cs_bucket_mult: float
    code_mult: int
    tail_rep_mult: int
    rho: float
    h: int
    # multiplies the median-based tail estimate, see tail.py
    tail_scale: float
    # error ratio target (1 + error_C * eps)^2 on planted sparse-plus-noise signals
    error_C: float

    def rows_constant(self, c: float) -> float:
        """C1 with m <= C1 * (k/eps) * ceil(log2 n) for every (n, k, eps)."""
        return (
            c * (self.bucket_mult * self.code_mult + self.cs_row_mult * self.cs_bucket_mult)
            + self.code_mult
            + self.cs_row_mult
            + self.tail_rep_mult
        )

    def column_constant(self) -> float:
        """C2 with every column sparsity <= C2 * ceil(log2 n)."""
        return self.tail_rep_mult + self.cs_row_mult + self.h * self.code_mult / 2


PAPER = Profile(
    name="paper",
    bucket_mult=2.0**19,
    cs_row_mult=10,
    cs_bucket_mult=8192,
    code_mult=2048,
    tail_rep_mult=8,
    rho=2048.0,
    h=3,
    tail_scale=1.0,
    error_C=900.0,
)

PRACTICAL = Profile(
    name="practical",
    bucket_mult=16,
    cs_row_mult=2,
    cs_bucket_mult=16,
    code_mult=16,
    tail_rep_mult=8,
    rho=16.0,
    h=3,
    tail_scale=1.0,
    error_C=0.01,
)

PROFILES: dict[str, Profile] = {p.name: p for p in (PAPER, PRACTICAL)}


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ParameterError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


@dataclass(frozen=True)
class Params:
    """All problem and construction constants.

    Build with :meth:`from_profile`; the raw constructor accepts explicit
    sizes and only validates them.
    """

    n: int
    k: int
    eps: float
    c: float = 2.0
    rho: float = 2048.0
    h: int = 3
    bucket_mult: float = 2.0**19
    cs_rows: int = 1
    cs_buckets: int = 2
    code_len: int = 2
    tail_reps: int = 1
    tail_scale: float = 1.0
    seed: int = 0
    profile: str = "custom"
    extra: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError(f"n must be positive, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ParameterError(f"k must satisfy 1 <= k <= n, got k={self.k}, n={self.n}")
        if not 0.0 < self.eps < 1.0:
            raise ParameterError(f"eps must lie in (0, 1), got {self.eps}")
        if self.c < 1:
            raise ParameterError(f"c must be >= 1, got {self.c}")
        if self.h < 2:
            raise ParameterError(f"h must be >= 2, got {self.h}")
        if self.rho < 1:
            raise ParameterError(f"rho must be >= 1, got {self.rho}")
        for name in ("cs_rows", "cs_buckets", "code_len", "tail_reps"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.bucket_mult <= 0 or self.tail_scale <= 0:
            raise ParameterError("bucket_mult and tail_scale must be positive")
        if self.num_buckets < self.h:
            raise ParameterError(f"need B >= h, got B={self.num_buckets}, h={self.h}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_profile(
        cls,
        n: int,
        k: int,
        eps: float,
        c: float = 2.0,
        profile: str | Profile = "practical",
        seed: int = 0,
        **overrides: Any,
    ) -> Params:
        prof = get_profile(profile) if isinstance(profile, str) else profile
        if n < 1 or k < 1 or not 0.0 < eps < 1.0:
            # delegate the message to __post_init__
            return cls(n=n, k=k, eps=eps, c=c)
        lg = log2n(n)
        ck_eps = c * k / eps
        values: dict[str, Any] = dict(
            n=n,
            k=k,
            eps=eps,
            c=c,
            rho=prof.rho,
            h=prof.h,
            bucket_mult=prof.bucket_mult,
            cs_rows=prof.cs_row_mult * lg,
            cs_buckets=max(2, math.ceil(prof.cs_bucket_mult * ck_eps)),
            code_len=prof.code_mult * lg,
            tail_reps=prof.tail_rep_mult * lg,
            tail_scale=prof.tail_scale,
            seed=seed,
            profile=prof.name,
        )
        values.update(overrides)
        return cls(**values)

    @property
    def log2n(self) -> int:
        return log2n(self.n)

    @property
    def num_buckets(self) -> int:
        return math.ceil(self.bucket_mult * self.c * self.k / self.eps)

    @property
    def ck(self) -> int:
        return min(self.n, math.ceil(self.c * self.k))

    def with_seed(self, seed: int) -> Params:
        return replace(self, seed=seed)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("extra")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Params:
        known = {f for f in cls.__dataclass_fields__ if f != "extra"}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown Params fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> Params:
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# vectors


def as_vector(values: Any, n: int | None = None) -> np.ndarray:
    """Validate and return ``values`` as a finite float64 vector."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise DimensionError(f"vector has length {x.shape[0]}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("vector entries must be finite")
    return x


@dataclass
class SparseApprox:
    """Recovered approximation x' as an index -> value map."""

    entries: dict[int, float]
    bound: int

    def __post_init__(self) -> None:
        if len(self.entries) > self.bound:
            raise ParameterError(f"support {len(self.entries)} exceeds bound {self.bound}")

    def to_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for i, v in self.entries.items():
            if not 0 <= i < n:
                raise DimensionError(f"index {i} out of range for n={n}")
            out[i] = v
        return out

    @property
    def support(self) -> set[int]:
        return {i for i, v in self.entries.items() if v != 0.0}


def top_indices(x: np.ndarray, j: int) -> np.ndarray:
    """Indices of the j largest |x_i|, ties broken toward the lower index."""
    order = np.lexsort((np.arange(x.shape[0]), -np.abs(x)))
    return order[:j]


def tail_norm_sq(x: Any, j: int) -> float:
    """Sum of squares of all but the j largest-magnitude entries."""
    x = as_vector(x)
    n = x.shape[0]
    if not 0 <= j <= n:
        raise ParameterError(f"j must lie in [0, {n}], got {j}")
    if j == n:
        return 0.0
    keep = np.ones(n, dtype=bool)
    keep[top_indices(x, j)] = False
    return math.fsum((x[keep] ** 2).tolist())


@dataclass(frozen=True)
class Classification:
    top: frozenset[int]
    heavy: frozenset[int]
    light: frozenset[int]
    intermediate: frozenset[int]
    tail_k: float
    tail_ck: float


def classify(x: Any, p: Params) -> Classification:
    """Split [n] into top-k, heavy/light and intermediate coordinates.

    A zero coordinate is never heavy or intermediate, even when the tail
    vanishes and the threshold is 0.
    """
    x = as_vector(x, p.n)
    sq = x**2
    tail_k = tail_norm_sq(x, p.k)
    tail_ck = tail_norm_sq(x, p.ck)
    nz = x != 0.0
    heavy = nz & (sq >= (p.eps / p.k) * tail_k)
    inter = nz & (sq >= (p.eps / (4 * p.c * p.k)) * tail_ck)
    idx = np.arange(p.n)
    return Classification(
        top=frozenset(top_indices(x, p.k).tolist()),
        heavy=frozenset(idx[heavy].tolist()),
        light=frozenset(idx[~heavy].tolist()),
        intermediate=frozenset(idx[inter].tolist()),
        tail_k=tail_k,
        tail_ck=tail_ck,
    )


def error_ratio(x: Any, xp: SparseApprox | np.ndarray, k: int) -> float | str:
    """||x - x'||^2 / ||x_{-k}||^2, with :data:`EXACT` for 0/0 and inf for a/0."""
    x = as_vector(x)
    dense = xp.to_dense(x.shape[0]) if isinstance(xp, SparseApprox) else as_vector(xp, x.shape[0])
    num = math.fsum(((x - dense) ** 2).tolist())
    den = tail_norm_sq(x, k)
    if den == 0.0:
        return EXACT if num == 0.0 else math.inf
    return num / den


# ---------------------------------------------------------------------------
# vector files

VECTOR_MAGIC = b"PSKV"
VECTOR_VERSION = 1
_VECTOR_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("n", "<u8")])


def write_vector_bin(path: str | Path, x: np.ndarray) -> None:
    x = as_vector(x)
    header = np.array([(VECTOR_MAGIC, VECTOR_VERSION, x.shape[0])], dtype=_VECTOR_HEADER)
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(x.astype("<f8").tobytes())


def read_vector_bin(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise ParameterError(f"{path}: truncated vector header")
    header = np.frombuffer(raw[:16], dtype=_VECTOR_HEADER)[0]
    if header["magic"] != VECTOR_MAGIC:
        raise ParameterError(f"{path}: bad magic {header['magic']!r}")
    if header["version"] != VECTOR_VERSION:
        raise ParameterError(f"{path}: unsupported version {header['version']}")
    n = int(header["n"])
    if len(raw) != 16 + 8 * n:
        raise ParameterError(f"{path}: expected {n} values, file has {(len(raw) - 16) / 8}")
    return as_vector(np.frombuffer(raw[16:], dtype="<f8").astype(np.float64))


def write_vector_csv(path: str | Path, x: np.ndarray) -> None:
    """Write nonzero entries as ``index,value`` lines after a ``# n=`` header."""
    x = as_vector(x)
    with open(path, "w") as fh:
        fh.write(f"# n={x.shape[0]}\n")
        for i in np.flatnonzero(x):
            fh.write(f"{i},{float(x[i])!r}\n")


def read_vector_csv(path: str | Path, n: int | None = None) -> np.ndarray:
    entries: dict[int, float] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line[1:].strip().startswith("n=") and n is None:
                n = int(line[1:].strip()[2:])
            continue
        try:
            i_s, v_s = line.split(",")
            entries[int(i_s)] = float(v_s)
        except ValueError:
            raise ParameterError(f"{path}:{lineno}: expected 'index,value'") from None
    if n is None:
        n = max(entries, default=-1) + 1
    x = np.zeros(n)
    for i, v in entries.items():
        if not 0 <= i < n:
            raise DimensionError(f"{path}: index {i} out of range for n={n}")
        x[i] = v
    return as_vector(x)


def read_vector(path: str | Path, n: int | None = None) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == VECTOR_MAGIC:
        x = read_vector_bin(path)
        if n is not None and x.shape[0] != n:
            raise DimensionError(f"{path}: vector has length {x.shape[0]}, expected {n}")
        return x
    return read_vector_csv(path, n)


def write_vector(path: str | Path, x: np.ndarray) -> None:
    if str(path).endswith(".csv"):
        write_vector_csv(path, x)
    else:
        write_vector_bin(path, x)
