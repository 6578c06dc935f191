"""Two-mode Fock-space algebra for a lossless beam splitter.

The beam splitter maps creation operators as

    a1^dag -> t b1^dag + i r b2^dag
    a2^dag -> i r b1^dag + t b2^dag

with real t, r and t^2 + r^2 = 1. For a frequency converter the two modes are
the two colors and r^2 is the transition probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class BeamSplitterMatrix:
    """Lossless 2x2 mode coupler ``[[t, s*i*r], [s*i*r, t]]``.

    ``phase_sign`` is +1 for the standard convention (off-diagonal phase
    +pi/2). The inverse of a splitter is its complex conjugate, which is
    represented with ``phase_sign=-1``.
    """

    t: float
    r: float
    phase_sign: int = 1

    def __post_init__(self):
        if not (0.0 <= self.t <= 1.0 and 0.0 <= self.r <= 1.0):
            raise ValueError(f"t and r must lie in [0, 1], got t={self.t}, r={self.r}")
        if abs(self.t**2 + self.r**2 - 1.0) > UNITARITY_TOL:
            raise ValueError(f"t^2 + r^2 = {self.t**2 + self.r**2!r} != 1")
        if self.phase_sign not in (1, -1):
            raise ValueError("phase_sign must be +1 or -1")

    @property
    def matrix(self) -> np.ndarray:
        off = self.phase_sign * 1j * self.r
        return np.array([[self.t, off], [off, self.t]], dtype=complex)

    @property
    def theta(self) -> float:
        """Interaction angle with t = cos(theta), r = sin(theta)."""
        return math.atan2(self.r, self.t)

    @property
    def eta(self) -> float:
        return self.r**2

    def conjugate(self) -> "BeamSplitterMatrix":
        """The inverse splitter B* (equal to B^dagger since B is symmetric)."""
        return BeamSplitterMatrix(self.t, self.r, -self.phase_sign)


def make_beam_splitter(eta: float) -> BeamSplitterMatrix:
    """Beam splitter with transition probability ``eta`` (r^2 = eta)."""
    if not 0.0 <= eta <= 1.0 or math.isnan(eta):
        raise ValueError(f"transition probability must lie in [0, 1], got {eta}")
    return BeamSplitterMatrix(t=math.sqrt(1.0 - eta), r=math.sqrt(eta))


@dataclass(frozen=True)
class TwoModeFockState:
    """Pure state of two bosonic modes truncated at ``n_max`` total photons.

    ``amplitudes[n1, n2]`` is the coefficient of ``|n1, n2>``; entries with
    ``n1 + n2 > n_max`` are always zero.
    """

    n_max: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.n_max + 1, self.n_max + 1):
            raise ValueError(f"amplitude array must have shape {(self.n_max + 1,) * 2}")
        n1, n2 = np.indices(amps.shape)
        if np.any(amps[n1 + n2 > self.n_max] != 0):
            raise ValueError("amplitudes beyond n_max total photons must vanish")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n1: int, n2: int, n_max: int = 4) -> "TwoModeFockState":
        if n1 < 0 or n2 < 0 or n1 + n2 > n_max:
            raise ValueError(f"|{n1},{n2}> is outside the truncated space (n_max={n_max})")
        amps = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        amps[n1, n2] = 1.0
        return cls(n_max, amps)

    def amplitude(self, n1: int, n2: int) -> complex:
        if n1 + n2 > self.n_max:
            return 0j
        return complex(self.amplitudes[n1, n2])

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def mean_photon_number(self) -> float:
        n1, n2 = np.indices(self.amplitudes.shape)
        return float(np.sum((n1 + n2) * np.abs(self.amplitudes) ** 2))

    def nonzero(self, tol: float = 0.0) -> dict[tuple[int, int], complex]:
        idx = np.argwhere(np.abs(self.amplitudes) > tol)
        return {(int(a), int(b)): complex(self.amplitudes[a, b]) for a, b in idx}


def apply_beam_splitter(state: TwoModeFockState, bs: BeamSplitterMatrix) -> TwoModeFockState:
    """Evolve ``state`` through ``bs`` by exact polynomial substitution.

    Each input term ``c (a1^dag)^n1 (a2^dag)^n2 / sqrt(n1! n2!) |0>`` is
    expanded binomially with ``a_j^dag -> sum_k B[j, k] b_k^dag``.
    """
    m = bs.matrix
    out = np.zeros_like(state.amplitudes, dtype=complex)
    for (n1, n2), c in state.nonzero().items():
        pref = c / math.sqrt(math.factorial(n1) * math.factorial(n2))
        for k1 in range(n1 + 1):
            # (m00 b1 + m01 b2)^n1 contributes b1^k1 b2^(n1-k1)
            c1 = math.comb(n1, k1) * m[0, 0] ** k1 * m[0, 1] ** (n1 - k1)
            for k2 in range(n2 + 1):
                c2 = math.comb(n2, k2) * m[1, 0] ** k2 * m[1, 1] ** (n2 - k2)
                p = k1 + k2
                q = (n1 - k1) + (n2 - k2)
                out[p, q] += pref * c1 * c2 * math.sqrt(math.factorial(p) * math.factorial(q))
    return TwoModeFockState(state.n_max, out)


def coincidence_probability(state: TwoModeFockState) -> float:
    """Probability of exactly one photon in each output mode."""
    return abs(state.amplitude(1, 1)) ** 2


def max_visibility_bound(eta: float) -> float:
    """Largest HOM dip visibility reachable with splitting ratio ``eta``.

    Dip floor (t^2 - r^2)^2 against the distinguishable baseline t^4 + r^4,
    giving V = 2 t^2 r^2 / (t^4 + r^4).
    """
    if not 0.0 < eta < 1.0:
        raise ValueError(f"visibility bound needs 0 < eta < 1, got {eta}")
    t2, r2 = 1.0 - eta, eta
    return 2.0 * t2 * r2 / (t2**2 + r2**2)
