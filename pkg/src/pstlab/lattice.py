"""PST coupling spectra and their mapping onto waveguide spacings.

Units follow the fabrication convention: spacings and positions in
micrometres, coupling rates in mm^-1, propagation lengths in mm.  Because the
decay constant ``b`` is in um^-1, ``b * d`` is dimensionless and no conversion
is needed inside ``C(d) = a exp(-b d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import InvalidArgumentError, InvalidDesignError, UnsupportedParametrizationError

SCHEMA_VERSION = 1
LENGTH_ATOL_UM = 1e-9


@dataclass(frozen=True)
class CouplingSpectrum:
    """Nearest-neighbour couplings ``C_{n,n+1}`` for ``n = 1..N-1`` (mm^-1)."""

    c0: float
    couplings: tuple[float, ...]

    @property
    def n_sites(self) -> int:
        return len(self.couplings) + 1

    @property
    def c_max(self) -> float:
        return max(self.couplings)

    def __post_init__(self):
        if len(self.couplings) < 1:
            raise InvalidDesignError("a spectrum needs at least one coupling")
        if any(c <= 0 for c in self.couplings):
            raise InvalidDesignError("couplings must be positive")


@dataclass(frozen=True)
class ArrayDesign:
    n_sites: int
    d_min: float
    decay_a: float
    decay_b: float
    spacings: tuple[float, ...]

    def __post_init__(self):
        if self.n_sites < 2:
            raise InvalidDesignError(f"n_sites must be >= 2, got {self.n_sites}")
        if len(self.spacings) != self.n_sites - 1:
            raise InvalidDesignError("need exactly n_sites - 1 spacings")
        if any(d < self.d_min - LENGTH_ATOL_UM for d in self.spacings):
            raise InvalidDesignError("a spacing is below d_min")
        s = np.asarray(self.spacings)
        if not np.allclose(s, s[::-1], rtol=0.0, atol=LENGTH_ATOL_UM):
            raise InvalidDesignError("spacings must be mirror-symmetric")

    @property
    def positions(self) -> tuple[float, ...]:
        return tuple(float(x) for x in np.concatenate([[0.0], np.cumsum(self.spacings)]))

    @property
    def c_max(self) -> float:
        return coupling_from_distance(min(self.spacings), self.decay_a, self.decay_b)

    @property
    def c0(self) -> float:
        """PST constant implied by the design's largest coupling."""
        return 2.0 * self.c_max / math.sqrt(self.n_sites**2 - 1)

    def couplings(self, decay_a: float | None = None, decay_b: float | None = None) -> CouplingSpectrum:
        """Nearest-neighbour spectrum realised by the spacings.

        ``decay_a``/``decay_b`` override the design constants, e.g. to model a
        polarization that sees a different decay law.
        """
        a = self.decay_a if decay_a is None else decay_a
        b = self.decay_b if decay_b is None else decay_b
        cs = tuple(coupling_from_distance(d, a, b) for d in self.spacings)
        return CouplingSpectrum(c0=2.0 * max(cs) / math.sqrt(self.n_sites**2 - 1), couplings=cs)

    def z_pst(self) -> float:
        return z_pst(self.n_sites, self.c_max)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "n_sites": self.n_sites,
            "d_min_um": self.d_min,
            "decay_a_per_mm": self.decay_a,
            "decay_b_per_um": self.decay_b,
            "spacings_um": list(self.spacings),
            "positions_um": list(self.positions),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ArrayDesign":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise InvalidDesignError(f"unsupported design schema_version {doc.get('schema_version')!r}")
        design = cls(
            n_sites=int(doc["n_sites"]),
            d_min=float(doc["d_min_um"]),
            decay_a=float(doc["decay_a_per_mm"]),
            decay_b=float(doc["decay_b_per_um"]),
            spacings=tuple(float(d) for d in doc["spacings_um"]),
        )
        if "positions_um" in doc and not np.allclose(
            doc["positions_um"], design.positions, rtol=0.0, atol=LENGTH_ATOL_UM
        ):
            raise InvalidDesignError("positions_um are inconsistent with spacings_um")
        return design


def pst_coupling_spectrum(n_sites: int, c0: float) -> CouplingSpectrum:
    """Couplings ``c0 * sqrt(n (N - n))``; equally spaced eigenvalues give mirror transfer."""
    if n_sites < 2:
        raise InvalidDesignError(f"n_sites must be >= 2, got {n_sites}")
    if not c0 > 0:
        raise InvalidDesignError(f"c0 must be positive, got {c0}")
    n = np.arange(1, n_sites)
    return CouplingSpectrum(c0=float(c0), couplings=tuple(float(c) for c in c0 * np.sqrt(n * (n_sites - n))))


def uniform_spectrum(n_sites: int, coupling: float) -> CouplingSpectrum:
    if n_sites < 2:
        raise InvalidDesignError(f"n_sites must be >= 2, got {n_sites}")
    if not coupling > 0:
        raise InvalidDesignError(f"coupling must be positive, got {coupling}")
    return CouplingSpectrum(
        c0=2.0 * coupling / math.sqrt(n_sites**2 - 1), couplings=(float(coupling),) * (n_sites - 1)
    )


def pst_time(c0: float) -> float:
    """Transfer length ``pi / (2 c0)`` in mm for ``c0`` in mm^-1."""
    if not c0 > 0:
        raise InvalidDesignError(f"c0 must be positive, got {c0}")
    return math.pi / (2.0 * c0)


def coupling_from_distance(d: float, decay_a: float, decay_b: float) -> float:
    if d < 0:
        raise InvalidArgumentError(f"distance must be non-negative, got {d}")
    return decay_a * math.exp(-decay_b * d)


def spacing_from_coupling(n: int, n_sites: int, d_min: float, decay_b: float) -> float:
    """Gap ``d_n`` (um) between sites ``n`` and ``n+1`` that realises the PST coupling.

    Only defined for odd ``n_sites``; the central gaps equal ``d_min``.
    """
    if n_sites < 2:
        raise InvalidDesignError(f"n_sites must be >= 2, got {n_sites}")
    if n_sites % 2 == 0:
        raise UnsupportedParametrizationError(f"odd N required for the spacing law, got N={n_sites}")
    if not 1 <= n <= n_sites - 1:
        raise InvalidArgumentError(f"gap index {n} outside 1..{n_sites - 1}")
    if not decay_b > 0:
        raise InvalidDesignError("decay_b must be positive")
    ratio = 0.5 * math.sqrt((n_sites**2 - 1) / (n * (n_sites - n)))
    return d_min + math.log(ratio) / decay_b


def z_pst(n_sites: int, c_max: float) -> float:
    """Transfer length from the largest coupling, ``pi sqrt(N^2-1) / (4 C_max)``.

    Exact for odd N, where the central coupling is ``C0 sqrt(N^2-1) / 2``.  For
    even N the largest coupling is ``C0 N / 2``; use :func:`pst_time` instead.
    """
    if n_sites < 2:
        raise InvalidDesignError(f"n_sites must be >= 2, got {n_sites}")
    if not c_max > 0:
        raise InvalidDesignError(f"c_max must be positive, got {c_max}")
    return math.pi * math.sqrt(n_sites**2 - 1) / (4.0 * c_max)


def design_array(n_sites: int, d_min: float, decay_a: float, decay_b: float) -> ArrayDesign:
    if not d_min > 0:
        raise InvalidDesignError(f"d_min must be positive, got {d_min}")
    if not (decay_a > 0 and decay_b > 0):
        raise InvalidDesignError("decay constants must be positive")
    spacings = tuple(spacing_from_coupling(n, n_sites, d_min, decay_b) for n in range(1, n_sites))
    return ArrayDesign(n_sites=n_sites, d_min=d_min, decay_a=decay_a, decay_b=decay_b, spacings=spacings)
