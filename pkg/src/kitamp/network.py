"""Frequency-domain linear network engine.

Covers the passive microwave side of the amplifier: telegrapher two-ports
and their ABCD cascades, ABCD <-> S conversion, periodic (Bloch)
dispersion of the loaded/unloaded supercell medium, a symmetric
coupled-line model of the on-chip directional coupler, and a circuit
model of the on-chip bias tee with its high-impedance dc branch.

Conventions
-----------
* ABCD matrices relate (V, I) at the input port to (V, I) at the output
  port with the output current flowing out of the network.
* S-parameters use a single real reference impedance at every port.
* ``matrix[k, i, j]`` is S_(i+1)(j+1) at grid point ``k``; the helper
  :meth:`NPortSParams.s` takes 1-based port indices.
* Everything here is a pure per-frequency computation: grids can be
  partitioned and evaluated concurrently, results merged in grid order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ConversionError,
    DomainError,
    GridAlignmentError,
    PreconditionError,
    ValidationError,
)
from .nonlinearity import FilmSpec


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Ordered, strictly positive evaluation frequencies in Hz."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        bad = []
        if pts.ndim != 1 or pts.size == 0:
            bad.append("points")
        else:
            if not np.all(pts > 0):
                bad.append("points (all must be > 0)")
            if pts.size > 1 and not np.all(np.diff(pts) > 0):
                bad.append("points (must be strictly increasing)")
        if bad:
            raise ValidationError(
                f"invalid FrequencyGrid: {', '.join(bad)}", fields=bad
            )

    @classmethod
    def linear(cls, start: float, stop: float, n: int) -> "FrequencyGrid":
        return cls(np.linspace(start, stop, n))

    def __len__(self) -> int:
        return self.points.size

    def same_as(self, other: "FrequencyGrid") -> bool:
        return np.array_equal(self.points, other.points)

    @property
    def omega(self) -> np.ndarray:
        return 2.0 * np.pi * self.points


@dataclass(frozen=True)
class LineSection:
    """Uniform transmission-line section.

    ``char_impedance`` must equal sqrt(L'/C'); use the factories to stay
    consistent.  ``loss_per_length`` is a frequency-independent
    attenuation in Np/m applied through a complex propagation constant.
    """

    char_impedance: float
    length: float
    inductance_per_length: float
    capacitance_per_length: float
    loss_per_length: float = 0.0

    def __post_init__(self):
        bad = []
        for name in (
            "char_impedance",
            "length",
            "inductance_per_length",
            "capacitance_per_length",
        ):
            if not getattr(self, name) > 0:
                bad.append(name)
        if self.loss_per_length < 0:
            bad.append("loss_per_length")
        if bad:
            raise ValidationError(
                f"invalid LineSection: non-positive {', '.join(bad)}", fields=bad
            )
        z = math.sqrt(self.inductance_per_length / self.capacitance_per_length)
        if abs(z - self.char_impedance) > 1e-9 * self.char_impedance:
            raise ValidationError(
                f"char_impedance {self.char_impedance} inconsistent with "
                f"sqrt(L'/C') = {z}",
                fields=["char_impedance"],
            )

    @classmethod
    def from_impedance(
        cls,
        char_impedance: float,
        length: float,
        phase_velocity: float,
        loss_per_length: float = 0.0,
    ) -> "LineSection":
        """Build from (Z0, v): L' = Z0/v, C' = 1/(Z0 v)."""
        return cls(
            char_impedance=char_impedance,
            length=length,
            inductance_per_length=char_impedance / phase_velocity,
            capacitance_per_length=1.0 / (char_impedance * phase_velocity),
            loss_per_length=loss_per_length,
        )

    @classmethod
    def from_film(
        cls,
        film: FilmSpec,
        char_impedance: float,
        length: float,
        loss_per_length: float = 0.0,
    ) -> "LineSection":
        """High-kinetic-inductance trace: L' fixed by the film, C' chosen
        to hit the impedance target."""
        lp = film.inductance_per_length
        return cls(
            char_impedance=char_impedance,
            length=length,
            inductance_per_length=lp,
            capacitance_per_length=lp / char_impedance**2,
            loss_per_length=loss_per_length,
        )

    @property
    def phase_velocity(self) -> float:
        return 1.0 / math.sqrt(
            self.inductance_per_length * self.capacitance_per_length
        )


@dataclass(frozen=True)
class SupercellSpec:
    """Periodic loading pattern of the amplification medium.

    One supercell is ``n_unloaded`` cells at ``unloaded_z0`` followed by
    ``n_loaded`` cells at ``loaded_z0``, each ``unit_cell_length`` long;
    the medium repeats it ``n_supercells`` times.
    """

    n_unloaded: int
    n_loaded: int
    unloaded_z0: float
    loaded_z0: float
    unit_cell_length: float
    n_supercells: int

    def __post_init__(self):
        bad = []
        if self.n_unloaded < 0 or self.n_loaded < 0 or self.n_unloaded + self.n_loaded == 0:
            bad.append("n_unloaded/n_loaded")
        if not self.unloaded_z0 > 0:
            bad.append("unloaded_z0")
        if not self.loaded_z0 > 0:
            bad.append("loaded_z0")
        if not self.unit_cell_length > 0:
            bad.append("unit_cell_length")
        if self.n_supercells < 1:
            bad.append("n_supercells")
        if bad:
            raise ValidationError(
                f"invalid SupercellSpec: {', '.join(bad)}", fields=bad
            )

    @property
    def cells_per_supercell(self) -> int:
        return self.n_unloaded + self.n_loaded

    @property
    def supercell_length(self) -> float:
        return self.cells_per_supercell * self.unit_cell_length

    @property
    def total_length(self) -> float:
        return self.n_supercells * self.supercell_length


@dataclass(frozen=True, eq=False)
class TwoPortChain:
    """Per-frequency complex 2x2 ABCD matrices on a grid."""

    grid: FrequencyGrid
    abcd: np.ndarray  # shape (F, 2, 2), complex

    def __post_init__(self):
        a = np.asarray(self.abcd, dtype=complex)
        object.__setattr__(self, "abcd", a)
        if a.shape != (len(self.grid), 2, 2):
            raise ValidationError(
                f"abcd shape {a.shape} does not match grid of {len(self.grid)}"
            )

    def determinant(self) -> np.ndarray:
        a = self.abcd
        return a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]


@dataclass(frozen=True, eq=False)
class NPortSParams:
    """Per-frequency complex n x n scattering matrices on a grid."""

    n_ports: int
    grid: FrequencyGrid
    matrix: np.ndarray  # shape (F, n, n), complex
    reference_impedance: float = 50.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        bad = []
        if self.n_ports < 1:
            bad.append("n_ports")
        if not self.reference_impedance > 0:
            bad.append("reference_impedance")
        if m.shape != (len(self.grid), self.n_ports, self.n_ports):
            bad.append("matrix (shape)")
        if bad:
            raise ValidationError(
                f"invalid NPortSParams: {', '.join(bad)}", fields=bad
            )

    def s(self, i: int, j: int) -> np.ndarray:
        """S_ij with 1-based port indices, over the whole grid."""
        return self.matrix[:, i - 1, j - 1]


def reciprocity_defect(sp: NPortSParams) -> float:
    """max_f max_ij |S_ij - S_ji|; zero for reciprocal structures."""
    m = sp.matrix
    return float(np.max(np.abs(m - np.transpose(m, (0, 2, 1)))))


def unitarity_defect(sp: NPortSParams) -> float:
    """max_f Frobenius norm of S^H S - I; zero for lossless structures."""
    m = sp.matrix
    gram = np.matmul(np.conj(np.transpose(m, (0, 2, 1))), m)
    gram -= np.eye(sp.n_ports)
    return float(np.max(np.linalg.norm(gram, axis=(1, 2))))


def passivity_margin(sp: NPortSParams) -> float:
    """Largest |S_ij| over the grid (<= 1 + eps for passive networks)."""
    return float(np.max(np.abs(sp.matrix)))


def unimodularity_defect(chain: TwoPortChain) -> float:
    """max_f |det(ABCD) - 1|; zero for reciprocal sections."""
    return float(np.max(np.abs(chain.determinant() - 1.0)))


# ---------------------------------------------------------------------------
# ABCD construction and algebra


def line_abcd(section: LineSection, grid: FrequencyGrid) -> TwoPortChain:
    """ABCD of a uniform line over the grid.

    Lossless form [[cos(bl), jZ sin(bl)], [j sin(bl)/Z, cos(bl)]] with
    b = w sqrt(L'C'); loss enters through gamma = alpha + j*b.
    """
    beta = grid.omega * math.sqrt(
        section.inductance_per_length * section.capacitance_per_length
    )
    gamma_l = (section.loss_per_length + 1j * beta) * section.length
    ch = np.cosh(gamma_l)
    sh = np.sinh(gamma_l)
    z = section.char_impedance
    abcd = np.empty((len(grid), 2, 2), dtype=complex)
    abcd[:, 0, 0] = ch
    abcd[:, 0, 1] = z * sh
    abcd[:, 1, 0] = sh / z
    abcd[:, 1, 1] = ch
    return TwoPortChain(grid=grid, abcd=abcd)


def series_impedance_abcd(z: np.ndarray, grid: FrequencyGrid) -> TwoPortChain:
    """ABCD [[1, Z], [0, 1]] of a series impedance (scalar or per-point)."""
    zz = np.broadcast_to(np.asarray(z, dtype=complex), (len(grid),))
    abcd = np.zeros((len(grid), 2, 2), dtype=complex)
    abcd[:, 0, 0] = 1.0
    abcd[:, 0, 1] = zz
    abcd[:, 1, 1] = 1.0
    return TwoPortChain(grid=grid, abcd=abcd)


def shunt_admittance_abcd(y: np.ndarray, grid: FrequencyGrid) -> TwoPortChain:
    """ABCD [[1, 0], [Y, 1]] of a shunt admittance (scalar or per-point)."""
    yy = np.broadcast_to(np.asarray(y, dtype=complex), (len(grid),))
    abcd = np.zeros((len(grid), 2, 2), dtype=complex)
    abcd[:, 0, 0] = 1.0
    abcd[:, 1, 0] = yy
    abcd[:, 1, 1] = 1.0
    return TwoPortChain(grid=grid, abcd=abcd)


def identity_chain(grid: FrequencyGrid) -> TwoPortChain:
    abcd = np.broadcast_to(np.eye(2, dtype=complex), (len(grid), 2, 2)).copy()
    return TwoPortChain(grid=grid, abcd=abcd)


def cascade(chains) -> TwoPortChain:
    """Per-frequency matrix product of the chains, in the given order."""
    chains = list(chains)
    if not chains:
        raise ValidationError("cascade requires at least one chain")
    grid = chains[0].grid
    for c in chains[1:]:
        if not grid.same_as(c.grid):
            raise GridAlignmentError(
                "cascade requires identical frequency grids"
            )
    out = chains[0].abcd
    for c in chains[1:]:
        out = np.matmul(out, c.abcd)
    return TwoPortChain(grid=grid, abcd=out)


def chain_power(chain: TwoPortChain, n: int) -> TwoPortChain:
    """``chain`` repeated ``n`` times (exponentiation by squaring)."""
    if n < 0:
        raise DomainError("repetition count must be >= 0")
    return TwoPortChain(
        grid=chain.grid, abcd=np.linalg.matrix_power(chain.abcd, n)
    )


def abcd_to_sparams(chain: TwoPortChain, z_ref: float = 50.0) -> NPortSParams:
    """Standard ABCD -> S conversion at reference impedance ``z_ref``."""
    if not z_ref > 0:
        raise DomainError("z_ref must be positive")
    a = chain.abcd[:, 0, 0]
    b = chain.abcd[:, 0, 1]
    c = chain.abcd[:, 1, 0]
    d = chain.abcd[:, 1, 1]
    denom = a + b / z_ref + c * z_ref + d
    small = np.abs(denom) < 1e-300
    if np.any(small):
        i = int(np.argmax(small))
        raise ConversionError(
            f"singular ABCD->S denominator at grid index {i} "
            f"(f = {chain.grid.points[i]:.6g} Hz)",
            index=i,
            frequency=float(chain.grid.points[i]),
        )
    s = np.empty((len(chain.grid), 2, 2), dtype=complex)
    s[:, 0, 0] = (a + b / z_ref - c * z_ref - d) / denom
    s[:, 0, 1] = 2.0 * (a * d - b * c) / denom
    s[:, 1, 0] = 2.0 / denom
    s[:, 1, 1] = (-a + b / z_ref - c * z_ref + d) / denom
    return NPortSParams(
        n_ports=2, grid=chain.grid, matrix=s, reference_impedance=z_ref
    )


def sparams_to_abcd(sp: NPortSParams) -> TwoPortChain:
    """Inverse of :func:`abcd_to_sparams` (2-port only)."""
    if sp.n_ports != 2:
        raise DomainError("S -> ABCD conversion requires a 2-port")
    z = sp.reference_impedance
    s11, s12 = sp.matrix[:, 0, 0], sp.matrix[:, 0, 1]
    s21, s22 = sp.matrix[:, 1, 0], sp.matrix[:, 1, 1]
    small = np.abs(s21) < 1e-300
    if np.any(small):
        i = int(np.argmax(small))
        raise ConversionError(
            f"singular S->ABCD conversion (S21 = 0) at grid index {i} "
            f"(f = {sp.grid.points[i]:.6g} Hz)",
            index=i,
            frequency=float(sp.grid.points[i]),
        )
    den = 2.0 * s21
    abcd = np.empty((len(sp.grid), 2, 2), dtype=complex)
    abcd[:, 0, 0] = ((1 + s11) * (1 - s22) + s12 * s21) / den
    abcd[:, 0, 1] = z * ((1 + s11) * (1 + s22) - s12 * s21) / den
    abcd[:, 1, 0] = ((1 - s11) * (1 - s22) - s12 * s21) / (z * den)
    abcd[:, 1, 1] = ((1 - s11) * (1 + s22) + s12 * s21) / den
    return TwoPortChain(grid=sp.grid, abcd=abcd)


# ---------------------------------------------------------------------------
# Supercell medium and Bloch dispersion


def supercell_unit(
    spec: SupercellSpec, film: FilmSpec, grid: FrequencyGrid
) -> TwoPortChain:
    """ABCD of one supercell: the unloaded run then the loaded run.

    Both runs share the film's per-length inductance; the loaded cells
    reach their higher impedance through reduced per-length capacitance.
    """
    parts = []
    if spec.n_unloaded:
        parts.append(
            line_abcd(
                LineSection.from_film(
                    film,
                    spec.unloaded_z0,
                    spec.n_unloaded * spec.unit_cell_length,
                ),
                grid,
            )
        )
    if spec.n_loaded:
        parts.append(
            line_abcd(
                LineSection.from_film(
                    film,
                    spec.loaded_z0,
                    spec.n_loaded * spec.unit_cell_length,
                ),
                grid,
            )
        )
    return cascade(parts)


def supercell_chain(
    spec: SupercellSpec, film: FilmSpec, grid: FrequencyGrid
) -> TwoPortChain:
    """ABCD of the full amplification medium (all supercells)."""
    return chain_power(supercell_unit(spec, film, grid), spec.n_supercells)


def mean_slowness(spec: SupercellSpec, film: FilmSpec) -> float:
    """Long-wavelength slowness of the homogenized supercell, s/m.

    Both cell types share the film's per-length inductance, so the
    homogenized line has sqrt(L' * mean(C')) with the length-weighted
    mean capacitance; this is the dc limit of the Bloch dispersion.
    """
    lp = film.inductance_per_length
    c_unloaded = lp / spec.unloaded_z0**2
    c_loaded = lp / spec.loaded_z0**2
    n = spec.cells_per_supercell
    c_mean = (spec.n_unloaded * c_unloaded + spec.n_loaded * c_loaded) / n
    return math.sqrt(lp * c_mean)


@dataclass(frozen=True, eq=False)
class BlochDispersion:
    """Bloch wavenumber of a periodic medium on a frequency grid.

    ``wavenumber`` is complex: the real part is the propagation phase in
    rad/m (continuous from dc, held at the band edge inside stopbands),
    the imaginary part the per-length attenuation in Np/m (nonzero only
    inside stopbands).
    """

    grid: FrequencyGrid
    wavenumber: np.ndarray  # complex, rad/m (+ j Np/m)
    in_stopband: np.ndarray  # bool
    supercell_length: float

    def interpolate(self, f: float) -> complex:
        """Linear interpolation of the complex wavenumber, anchored so
        that k -> 0 as f -> 0."""
        pts = np.concatenate(([0.0], self.grid.points))
        kre = np.concatenate(([0.0], self.wavenumber.real))
        kim = np.concatenate(([0.0], self.wavenumber.imag))
        if f < 0 or f > pts[-1]:
            raise DomainError(
                f"frequency {f:.6g} Hz outside dispersion grid"
            )
        return complex(np.interp(f, pts, kre), np.interp(f, pts, kim))

    def is_in_stopband(self, f: float) -> bool:
        """True if ``f`` falls in (or touches) a flagged stopband bin."""
        pts = self.grid.points
        if f <= pts[0]:
            return bool(self.in_stopband[0]) and f >= pts[0]
        if f >= pts[-1]:
            return bool(self.in_stopband[-1])
        j = int(np.searchsorted(pts, f))
        return bool(self.in_stopband[j - 1] or self.in_stopband[j])

    def stopband_intervals(self) -> list[tuple[float, float]]:
        """Contiguous flagged intervals as (f_lo, f_hi) pairs."""
        flags = self.in_stopband
        pts = self.grid.points
        out = []
        j = 0
        while j < flags.size:
            if flags[j]:
                j0 = j
                while j + 1 < flags.size and flags[j + 1]:
                    j += 1
                out.append((float(pts[j0]), float(pts[j])))
            j += 1
        return out


def bloch_dispersion(
    supercell: TwoPortChain, supercell_length: float
) -> BlochDispersion:
    """Bloch wavenumber from cos(k L) = (A + D)/2 of one supercell.

    The phase branch is chosen continuous from dc by tracking the
    unwrapped phase along the grid (the first grid point must lie in the
    first passband).  Inside stopbands the phase is pinned to the band
    edge and an attenuation component arccosh|(A+D)/2| / L is reported.
    """
    if not supercell_length > 0:
        raise DomainError("supercell_length must be positive")
    defect = unimodularity_defect(supercell)
    if defect > 1e-8:
        raise PreconditionError(
            f"supercell ABCD is not unimodular (|det - 1| = {defect:.3g}); "
            "Bloch analysis requires det = 1"
        )
    c = ((supercell.abcd[:, 0, 0] + supercell.abcd[:, 1, 1]) / 2.0).real
    n = c.size
    in_stop = np.abs(c) > 1.0
    phase = np.empty(n)
    atten = np.zeros(n)
    prev = 0.0
    step = 0.0
    for j in range(n):
        if in_stop[j]:
            atten[j] = math.acosh(abs(c[j]))
            phase[j] = math.pi * round(prev / math.pi)
        else:
            phi = math.acos(min(1.0, max(-1.0, c[j])))
            expected = prev + step
            n0 = round(expected / (2.0 * math.pi))
            cands = []
            for nn in (n0 - 1, n0, n0 + 1):
                cands.append(2.0 * math.pi * nn + phi)
                cands.append(2.0 * math.pi * nn - phi)
            # tie-break toward the larger candidate: phase advances with f
            phase[j] = min(cands, key=lambda x: (abs(x - expected), -x))
        if j > 0 and not in_stop[j] and not in_stop[j - 1]:
            step = phase[j] - phase[j - 1]
        prev = phase[j]
    k = (phase + 1j * atten) / supercell_length
    return BlochDispersion(
        grid=supercell.grid,
        wavenumber=k,
        in_stopband=in_stop,
        supercell_length=supercell_length,
    )


# ---------------------------------------------------------------------------
# Directional coupler (symmetric coupled lines, even/odd decomposition)


@dataclass(frozen=True)
class CouplerSpec:
    """Symmetric coupled-line coupler described by its even/odd modes.

    The physical sawtooth coupling region is reduced to a uniform
    coupled-line section with effective even/odd impedances and phase
    velocities; a velocity mismatch is the single knob that degrades
    directivity.  Equal impedances are allowed and describe the fully
    decoupled limit.
    """

    coupled_length: float
    even_impedance: float
    odd_impedance: float
    effective_phase_velocity_even: float
    effective_phase_velocity_odd: float

    def __post_init__(self):
        bad = []
        for name in (
            "coupled_length",
            "even_impedance",
            "odd_impedance",
            "effective_phase_velocity_even",
            "effective_phase_velocity_odd",
        ):
            if not getattr(self, name) > 0:
                bad.append(name)
        if bad:
            raise ValidationError(
                f"invalid CouplerSpec: non-positive {', '.join(bad)}",
                fields=bad,
            )
        if self.even_impedance < self.odd_impedance:
            raise ValidationError(
                "even_impedance must be >= odd_impedance",
                fields=["even_impedance"],
            )
        zm = math.sqrt(self.even_impedance * self.odd_impedance)
        if abs(zm - 50.0) > 0.05 * 50.0:
            raise ValidationError(
                f"sqrt(Z0e * Z0o) = {zm:.3f} ohm deviates from the matched "
                "50 ohm design by more than 5%",
                fields=["even_impedance", "odd_impedance"],
            )

    @property
    def max_coupling(self) -> float:
        """Midband voltage coupling k = (Z0e - Z0o)/(Z0e + Z0o)."""
        return (self.even_impedance - self.odd_impedance) / (
            self.even_impedance + self.odd_impedance
        )

    @classmethod
    def for_midband_coupling(
        cls,
        coupling_db: float,
        midband_frequency: float,
        coupled_length: float,
        z_match: float = 50.0,
        velocity_mismatch: float = 0.0,
    ) -> "CouplerSpec":
        """Calibrate impedances for a given midband coupling.

        Inverts k = (Z0e - Z0o)/(Z0e + Z0o) with sqrt(Z0e Z0o) = z_match
        and makes the section a quarter wavelength at
        ``midband_frequency`` (mean-velocity convention).
        ``velocity_mismatch`` m splits the velocities as
        v_even = v (1 + m/2), v_odd = v (1 - m/2).
        """
        k = 10.0 ** (coupling_db / 20.0)
        if not 0.0 < k < 1.0:
            raise DomainError("coupling must be below 0 dB")
        ratio = (1.0 + k) / (1.0 - k)
        z_even = z_match * math.sqrt(ratio)
        z_odd = z_match / math.sqrt(ratio)
        v = 4.0 * midband_frequency * coupled_length
        return cls(
            coupled_length=coupled_length,
            even_impedance=z_even,
            odd_impedance=z_odd,
            effective_phase_velocity_even=v * (1.0 + velocity_mismatch / 2.0),
            effective_phase_velocity_odd=v * (1.0 - velocity_mismatch / 2.0),
        )


def coupler_sparams(
    spec: CouplerSpec, grid: FrequencyGrid, z_ref: float = 50.0
) -> NPortSParams:
    """4-port S-parameters of the symmetric coupled-line coupler.

    Ports: 1 main in, 2 main out (through), 3 coupled line at the port-1
    end, 4 coupled line at the port-2 end.  The pump applied at port 4
    couples onto the main line toward port 2 (|S24|, forward coupling);
    |S23| is the reverse coupling and |S24| - |S23| in dB the
    directivity.
    """
    se = abcd_to_sparams(
        line_abcd(
            LineSection.from_impedance(
                spec.even_impedance,
                spec.coupled_length,
                spec.effective_phase_velocity_even,
            ),
            grid,
        ),
        z_ref,
    )
    so = abcd_to_sparams(
        line_abcd(
            LineSection.from_impedance(
                spec.odd_impedance,
                spec.coupled_length,
                spec.effective_phase_velocity_odd,
            ),
            grid,
        ),
        z_ref,
    )
    g_plus = (se.matrix[:, 0, 0] + so.matrix[:, 0, 0]) / 2.0
    g_minus = (se.matrix[:, 0, 0] - so.matrix[:, 0, 0]) / 2.0
    t_plus = (se.matrix[:, 1, 0] + so.matrix[:, 1, 0]) / 2.0
    t_minus = (se.matrix[:, 1, 0] - so.matrix[:, 1, 0]) / 2.0
    s = np.empty((len(grid), 4, 4), dtype=complex)
    # rows/cols in port order (1, 2, 3, 4); same-end pairs: (1,3), (2,4)
    for (i, j), val in {
        (0, 0): g_plus, (0, 1): t_plus, (0, 2): g_minus, (0, 3): t_minus,
        (1, 0): t_plus, (1, 1): g_plus, (1, 2): t_minus, (1, 3): g_minus,
        (2, 0): g_minus, (2, 1): t_minus, (2, 2): g_plus, (2, 3): t_plus,
        (3, 0): t_minus, (3, 1): g_minus, (3, 2): t_plus, (3, 3): g_plus,
    }.items():
        s[:, i, j] = val
    return NPortSParams(
        n_ports=4, grid=grid, matrix=s, reference_impedance=z_ref
    )


def coupler_metrics(sp: NPortSParams) -> dict:
    """Through/forward/reverse coupling and directivity, in dB."""
    if sp.n_ports != 4:
        raise DomainError("coupler metrics require a 4-port")
    with np.errstate(divide="ignore"):
        through = 20.0 * np.log10(np.abs(sp.s(2, 1)))
        forward = 20.0 * np.log10(np.abs(sp.s(2, 4)))
        reverse = 20.0 * np.log10(np.abs(sp.s(2, 3)))
    return {
        "frequency_hz": sp.grid.points.copy(),
        "through_db": through,
        "forward_coupling_db": forward,
        "reverse_coupling_db": reverse,
        "directivity_db": forward - reverse,
    }


# ---------------------------------------------------------------------------
# Bias tee


@dataclass(frozen=True)
class BiasTeeSpec:
    """On-chip bias tee: series dc-block capacitor plus an inductive dc
    branch realized as a long, narrow high-impedance kinetic line."""

    series_capacitance: float
    dc_branch_squares: int
    dc_branch_width: float
    dc_branch_impedance: float
    sheet_inductance: float

    def __post_init__(self):
        bad = [
            name
            for name in (
                "series_capacitance",
                "dc_branch_squares",
                "dc_branch_width",
                "dc_branch_impedance",
                "sheet_inductance",
            )
            if not getattr(self, name) > 0
        ]
        if bad:
            raise ValidationError(
                f"invalid BiasTeeSpec: non-positive {', '.join(bad)}",
                fields=bad,
            )

    @property
    def dc_branch_length(self) -> float:
        return self.dc_branch_squares * self.dc_branch_width

    @property
    def dc_branch_total_inductance(self) -> float:
        return self.dc_branch_squares * self.sheet_inductance

    def dc_branch_line(self, loss_per_length: float = 0.0) -> LineSection:
        lp = self.sheet_inductance / self.dc_branch_width
        return LineSection(
            char_impedance=self.dc_branch_impedance,
            length=self.dc_branch_length,
            inductance_per_length=lp,
            capacitance_per_length=lp / self.dc_branch_impedance**2,
            loss_per_length=loss_per_length,
        )


def bias_tee_sparams(
    spec: BiasTeeSpec, grid: FrequencyGrid, z_ref: float = 50.0
) -> NPortSParams:
    """3-port S-parameters of the bias tee.

    Ports: 1 rf in, 2 rf + dc out, 3 dc.  The series capacitor sits
    between ports 1 and 2; the dc branch line runs from the port-2 node
    to port 3.  Solved as a nodal system in (V, I) per frequency, which
    stays well conditioned through the branch's line resonances.
    """
    f = grid.points
    nf = f.size
    zc = 1.0 / (2j * np.pi * f * spec.series_capacitance)
    line = line_abcd(spec.dc_branch_line(), grid).abcd
    a, b = line[:, 0, 0], line[:, 0, 1]
    c, d = line[:, 1, 0], line[:, 1, 1]

    # unknowns x = [V1, I1, V2, I2, V3, I3]; rows:
    #   V1 - V2 - Zc I1 = 0
    #   V2 - A V3 + B I3 = 0
    #   I1 + I2 - C V3 + D I3 = 0
    #   Vk + Z0 Ik = 2 sqrt(Z0) a_k   (port excitations)
    m = np.zeros((nf, 6, 6), dtype=complex)
    m[:, 0, 0] = 1.0
    m[:, 0, 2] = -1.0
    m[:, 0, 1] = -zc
    m[:, 1, 2] = 1.0
    m[:, 1, 4] = -a
    m[:, 1, 5] = b
    m[:, 2, 1] = 1.0
    m[:, 2, 3] = 1.0
    m[:, 2, 4] = -c
    m[:, 2, 5] = d
    for p in range(3):
        m[:, 3 + p, 2 * p] = 1.0
        m[:, 3 + p, 2 * p + 1] = z_ref

    rhs = np.zeros((nf, 6, 3), dtype=complex)
    sq = math.sqrt(z_ref)
    for p in range(3):
        rhs[:, 3 + p, p] = 2.0 * sq

    x = np.linalg.solve(m, rhs)
    v = x[:, 0::2, :]
    i = x[:, 1::2, :]
    s = (v - z_ref * i) / (2.0 * sq)
    return NPortSParams(
        n_ports=3, grid=grid, matrix=s, reference_impedance=z_ref
    )


def dc_branch_input_impedance(
    spec: BiasTeeSpec, f: np.ndarray, termination="matched", z_ref: float = 50.0
) -> np.ndarray:
    """Input impedance of the dc branch line seen from the tee node.

    ``termination`` is 'matched' (z_ref), 'open', or a numeric load in
    ohms.
    """
    f = np.asarray(f, dtype=float)
    line = spec.dc_branch_line()
    beta_l = 2.0 * np.pi * f / line.phase_velocity * line.length
    z0 = spec.dc_branch_impedance
    t = np.tan(beta_l)
    if isinstance(termination, str) and termination == "open":
        with np.errstate(divide="ignore"):
            return -1j * z0 / t
    if isinstance(termination, str):
        if termination != "matched":
            raise DomainError(
                f"unknown dc branch termination {termination!r}"
            )
        zl = z_ref
    else:
        zl = float(termination)
    return z0 * (zl + 1j * z0 * t) / (z0 + 1j * zl * t)


def dc_branch_resonances(
    spec: BiasTeeSpec,
    f_max: float,
    termination="matched",
    z_ref: float = 50.0,
) -> np.ndarray:
    """Resonance frequencies of the dc branch below ``f_max``.

    Resonances are the local minima of |Z_in(f)|, where the branch
    shorts out the through line; they are located by scanning and
    refined by bounded minimization.  For the uniform-line model they
    form an exact ladder: multiples of v/(2 l) for a matched/short
    termination, odd multiples of v/(4 l) for an open one.
    """
    if not f_max > 0:
        raise DomainError("f_max must be positive")
    line = spec.dc_branch_line()
    f_half = line.phase_velocity / (2.0 * line.length)
    step = f_half / 64.0
    f_scan = np.arange(step, f_max + step, step)
    f_scan = f_scan[f_scan <= f_max]
    if f_scan.size < 3:
        return np.empty(0)
    mag = np.abs(dc_branch_input_impedance(spec, f_scan, termination, z_ref))
    out = []
    for j in range(1, f_scan.size - 1):
        if mag[j] <= mag[j - 1] and mag[j] < mag[j + 1]:
            res = minimize_scalar(
                lambda x: float(
                    np.abs(
                        dc_branch_input_impedance(
                            spec, np.array([x]), termination, z_ref
                        )[0]
                    )
                ),
                bounds=(f_scan[j - 1], f_scan[j + 1]),
                method="bounded",
                options={"xatol": f_half * 1e-10},
            )
            out.append(float(res.x))
    return np.asarray(out)
