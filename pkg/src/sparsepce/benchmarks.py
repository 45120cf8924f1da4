"""Built-in black-box models.

The waveguide is a rectangular guide of width ``w`` with a dispersive slab
(second-order Debye permittivity and permeability) of length ``ell`` placed
``d`` behind the input port and air on both sides. Only the TE10 mode is
considered, so the input reflection has a closed form: the slab is treated as
a transmission-line section between two semi-infinite air lines.

Time convention is exp(+i omega t). Relaxation times are given in units of
``time_unit`` seconds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import InputModel, UniformVariable, to_reference

EPS0 = 8.8541878128e-12  # F/m
MU0 = 1.25663706212e-6  # H/m
C0 = 1.0 / np.sqrt(EPS0 * MU0)

DEFAULT_TIME_UNIT = 1e-10  # s
DEFAULT_FREQUENCY = 5e9  # Hz
BROADBAND = (10e9, 20e9)  # Hz
DB_FLOOR = 1e-12
CUTOFF_RTOL = 1e-12  # |k_z^2| below this fraction of (pi/w)^2 counts as cutoff

PARAMETER_NAMES = (
    "w", "h", "ell", "d",
    "eps_s1", "eps_s2", "eps_inf",
    "mu_s1", "mu_s2", "mu_inf",
    "tau_e1", "tau_e2", "tau_m1", "tau_m2",
)
NOMINAL = np.array([
    30e-3, 3e-3, 7e-3, 1e-3,
    2.0, 2.2, 1.0,
    2.0, 3.0, 1.0,
    1.0, 1.1, 1.0, 2.0,
])
RELATIVE_SPREAD = 0.05


class CutoffError(ValueError):
    pass


@dataclass(frozen=True)
class DebyeMaterial:
    eps_inf: float = 1.0
    eps_s1: float = 2.0
    eps_s2: float = 2.2
    mu_inf: float = 1.0
    mu_s1: float = 2.0
    mu_s2: float = 3.0
    tau_e1: float = 1.0
    tau_e2: float = 1.1
    tau_m1: float = 1.0
    tau_m2: float = 2.0
    time_unit: float = DEFAULT_TIME_UNIT


@dataclass(frozen=True)
class WaveguideGeometry:
    w: float = 30e-3
    h: float = 3e-3  # carried for completeness; TE10 reflection does not depend on it
    ell: float = 7e-3
    d: float = 1e-3


def _debye_terms(inf, s1, s2, tau1, tau2, omega):
    return inf + (s1 - inf) / (1 + 1j * omega * tau1) + (s2 - inf) / (1 + 1j * omega * tau2)


def debye(material: DebyeMaterial, omega):
    """Relative permittivity and permeability at angular frequency ``omega``."""
    omega = np.asarray(omega, dtype=np.float64)
    if np.any(omega < 0):
        raise ValueError("omega must be non-negative")
    tu = material.time_unit
    eps = _debye_terms(material.eps_inf, material.eps_s1, material.eps_s2,
                       material.tau_e1 * tu, material.tau_e2 * tu, omega)
    mu = _debye_terms(material.mu_inf, material.mu_s1, material.mu_s2,
                      material.tau_m1 * tu, material.tau_m2 * tu, omega)
    if eps.ndim == 0:
        return complex(eps), complex(mu)
    return eps, mu


def longitudinal_wavenumber(omega, eps_r, mu_r, width):
    """TE10 propagation constant with Im(k_z) <= 0 (decay towards +z)."""
    kc2 = (np.pi / width) ** 2
    kz2 = omega**2 * MU0 * EPS0 * np.asarray(mu_r) * np.asarray(eps_r) - kc2
    if np.any(np.abs(kz2) <= CUTOFF_RTOL * kc2):
        raise CutoffError("degenerate cutoff: k_z = 0 in one of the regions")
    kz = np.sqrt(np.asarray(kz2, dtype=np.complex128))
    return np.where(kz.imag > 0, -kz, kz)


def _reflection(width, ell, eps_r, mu_r, freq):
    omega = 2 * np.pi * np.asarray(freq, dtype=np.float64)
    k_air = longitudinal_wavenumber(omega, 1.0, 1.0, width)
    k_slab = longitudinal_wavenumber(omega, eps_r, mu_r, width)
    z_air = omega * MU0 / k_air
    z_slab = omega * MU0 * mu_r / k_slab
    t = np.tan(k_slab * ell)
    z_in = z_slab * (z_air + 1j * z_slab * t) / (z_slab + 1j * z_air * t)
    # Power-wave reflection w.r.t. the air line: the usual (Z - Z0)/(Z + Z0)
    # for a propagating air region, exactly 1 when the air region is evanescent.
    gamma = (z_in - np.conj(z_air)) / (z_in + z_air)
    return np.abs(gamma)


def reflection(geometry: WaveguideGeometry, material: DebyeMaterial, f: float) -> float:
    """Magnitude of the TE10 input reflection coefficient, in [0, 1]."""
    if not f > 0:
        raise ValueError("frequency must be positive")
    eps_r, mu_r = debye(material, 2 * np.pi * f)
    return float(_reflection(geometry.w, geometry.ell, eps_r, mu_r, f))


def to_db(r):
    return 20.0 * np.log10(np.maximum(r, DB_FLOOR))


def reflection_from_samples(samples, frequency, time_unit=DEFAULT_TIME_UNIT):
    """Vectorized reflection for rows in ``PARAMETER_NAMES`` order."""
    s = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    f = np.broadcast_to(np.asarray(frequency, dtype=np.float64), s.shape[:1])
    omega = 2 * np.pi * f
    eps_r = _debye_terms(s[:, 6], s[:, 4], s[:, 5], s[:, 10] * time_unit, s[:, 11] * time_unit, omega)
    mu_r = _debye_terms(s[:, 9], s[:, 7], s[:, 8], s[:, 12] * time_unit, s[:, 13] * time_unit, omega)
    return _reflection(s[:, 0], s[:, 2], eps_r, mu_r, f)


def synthetic_poly(y, a: float = 1.0, b: float = 1.0) -> float:
    """a y1^2 + b y2 in reference coordinates; further coordinates are ignored."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] < 2:
        raise ValueError("synthetic_poly needs at least two coordinates")
    return a * y[..., 0] ** 2 + b * y[..., 1]


@dataclass
class Benchmark:
    """A named black box with its input model.

    ``many`` evaluates a batch of physical points (rows) and must agree with
    calling ``__call__`` row by row.
    """

    name: str
    input_model: InputModel
    many: Callable[[np.ndarray], np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __call__(self, y) -> float:
        return float(self.many(np.asarray(y, dtype=np.float64)[None, :])[0])


class WaveguideQoI:
    """Reflection in dB at a fixed frequency, or with frequency as 15th input."""

    def __init__(self, broadband: bool = False, frequency: float = DEFAULT_FREQUENCY,
                 band: tuple[float, float] = BROADBAND, time_unit: float = DEFAULT_TIME_UNIT):
        self.broadband = broadband
        self.frequency = frequency
        self.band = band
        self.time_unit = time_unit
        variables = [UniformVariable.around(v, RELATIVE_SPREAD) for v in NOMINAL]
        if broadband:
            variables.append(UniformVariable(*band))
        self.input_model = InputModel(variables)

    def __call__(self, samples) -> np.ndarray:
        s = np.atleast_2d(np.asarray(samples, dtype=np.float64))
        to_reference(self.input_model, s)  # bounds check only
        if self.broadband:
            r = reflection_from_samples(s[:, :14], s[:, 14], self.time_unit)
        else:
            r = reflection_from_samples(s, self.frequency, self.time_unit)
        return to_db(r)


def waveguide_qoi(sample, broadband: bool = False, frequency: float = DEFAULT_FREQUENCY,
                  time_unit: float = DEFAULT_TIME_UNIT) -> float:
    """Reflection in dB for one sample (14 or, in broadband mode, 15 coordinates)."""
    qoi = WaveguideQoI(broadband=broadband, frequency=frequency, time_unit=time_unit)
    return float(qoi(np.asarray(sample, dtype=np.float64)[None, :])[0])


def _waveguide(broadband: bool) -> Benchmark:
    qoi = WaveguideQoI(broadband=broadband)
    return Benchmark(
        name="waveguide-bb" if broadband else "waveguide-sf",
        input_model=qoi.input_model,
        many=qoi,
        metadata={
            "parameters": list(PARAMETER_NAMES) + (["f"] if broadband else []),
            "time_unit": qoi.time_unit,
            "frequency": None if broadband else qoi.frequency,
        },
    )


def _poly2d(a: float = 1.0, b: float = 1.0) -> Benchmark:
    model = InputModel.unit_cube(2)

    def many(points):
        return synthetic_poly(to_reference(model, np.atleast_2d(points)), a, b)

    return Benchmark(name="poly-2d", input_model=model, many=many, metadata={"a": a, "b": b})


REGISTRY: dict[str, Callable[[], Benchmark]] = {
    "waveguide-sf": lambda: _waveguide(False),
    "waveguide-bb": lambda: _waveguide(True),
    "poly-2d": _poly2d,
}


def get_benchmark(name: str) -> Benchmark:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(sorted(REGISTRY))}") from None
