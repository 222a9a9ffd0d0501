"""Gridded scalar fields u(x, t), noise, resampling and spectral diagnostics."""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from .domains import IntegrationDomain

__all__ = [
    "Field2D",
    "SpectrumProfile",
    "FieldFormatError",
    "sample_stddev",
    "add_gaussian_noise",
    "downsample",
    "crop",
    "power_spectrum",
    "windowed_spectrum",
    "mean_windowed_spectrum",
    "envelope",
    "correlation_scales",
    "read_field",
    "write_field",
]


class FieldFormatError(ValueError):
    """Raised when a field file cannot be parsed."""


@dataclass(frozen=True, eq=False)
class Field2D:
    """Uniformly gridded scalar field indexed as ``values[ix, it]``.

    The stored array is a read-only float64 copy, so instances can be shared
    between concurrent trials.
    """

    values: np.ndarray
    delta_x: float
    delta_t: float
    origin_x: float = 0.0
    origin_t: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.size == 0:
            raise ValueError(f"field values must be a non-empty 2D array, got shape {values.shape}")
        if not (self.delta_x > 0 and self.delta_t > 0):
            raise ValueError(f"grid spacings must be positive, got ({self.delta_x}, {self.delta_t})")
        if not (np.isfinite(self.delta_x) and np.isfinite(self.delta_t)):
            raise ValueError("grid spacings must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "delta_x", float(self.delta_x))
        object.__setattr__(self, "delta_t", float(self.delta_t))
        object.__setattr__(self, "origin_x", float(self.origin_x))
        object.__setattr__(self, "origin_t", float(self.origin_t))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_x(self) -> int:
        return self.values.shape[0]

    @property
    def n_t(self) -> int:
        return self.values.shape[1]

    @property
    def L_x(self) -> float:
        return (self.n_x - 1) * self.delta_x

    @property
    def L_t(self) -> float:
        return (self.n_t - 1) * self.delta_t

    @property
    def x(self) -> np.ndarray:
        return self.origin_x + self.delta_x * np.arange(self.n_x)

    @property
    def t(self) -> np.ndarray:
        return self.origin_t + self.delta_t * np.arange(self.n_t)

    def with_values(self, values) -> "Field2D":
        return Field2D(values, self.delta_x, self.delta_t, self.origin_x, self.origin_t)

    def __eq__(self, other):
        if not isinstance(other, Field2D):
            return NotImplemented
        return (
            self.delta_x == other.delta_x
            and self.delta_t == other.delta_t
            and self.origin_x == other.origin_x
            and self.origin_t == other.origin_t
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class SpectrumProfile:
    """Normalized magnitude of Fourier coefficients against angular frequency."""

    frequencies: np.ndarray
    power: np.ndarray = dc_field(repr=False)

    def peak(self) -> float:
        """Frequency with the largest power."""
        return float(self.frequencies[int(np.argmax(self.power))])


def sample_stddev(field: Field2D) -> float:
    """Sample standard deviation (``ddof=1``) over every grid value."""
    if field.values.size < 2:
        raise ValueError("sample standard deviation is undefined for a single value")
    return float(np.std(field.values, ddof=1))


def add_gaussian_noise(field: Field2D, sigma: float, seed=None) -> Field2D:
    """Return ``field`` plus i.i.d. Gaussian noise of standard deviation ``sigma * s_u``.

    ``s_u`` is :func:`sample_stddev` of the field the noise is added to.
    ``seed`` may be anything accepted by :func:`numpy.random.default_rng`.
    """
    if not sigma >= 0:
        raise ValueError(f"noise level must be non-negative, got {sigma}")
    if sigma == 0:
        return field
    scale = sigma * sample_stddev(field)
    rng = np.random.default_rng(seed)
    return field.with_values(field.values + rng.normal(0.0, scale, size=field.shape))


def downsample(field: Field2D, stride_x: int, stride_t: int) -> Field2D:
    """Keep every stride-th sample along each axis, starting at index 0."""
    for name, stride, n in (("stride_x", stride_x, field.n_x), ("stride_t", stride_t, field.n_t)):
        if int(stride) != stride or stride < 1:
            raise ValueError(f"{name} must be a positive integer, got {stride}")
        if (n - 1) // stride + 1 < 2:
            raise ValueError(f"{name}={stride} leaves fewer than 2 points out of {n}")
    if stride_x == 1 and stride_t == 1:
        return field
    return Field2D(
        field.values[::stride_x, ::stride_t],
        field.delta_x * stride_x,
        field.delta_t * stride_t,
        field.origin_x,
        field.origin_t,
    )


def crop(field: Field2D, n_x: int, n_t: int, start_x: int = 0, start_t: int = 0) -> Field2D:
    """Sub-field of ``n_x`` by ``n_t`` points starting at the given indices."""
    if n_x < 2 or n_t < 2:
        raise ValueError("a cropped field needs at least 2 points per axis")
    if start_x < 0 or start_t < 0 or start_x + n_x > field.n_x or start_t + n_t > field.n_t:
        raise ValueError(
            f"crop [{start_x}:{start_x + n_x}, {start_t}:{start_t + n_t}] "
            f"exceeds the {field.n_x}x{field.n_t} grid"
        )
    return Field2D(
        field.values[start_x:start_x + n_x, start_t:start_t + n_t],
        field.delta_x,
        field.delta_t,
        field.origin_x + start_x * field.delta_x,
        field.origin_t + start_t * field.delta_t,
    )


_AXES = {"space": 0, "x": 0, "time": 1, "t": 1}


def _axis_index(axis) -> int:
    try:
        return _AXES[axis]
    except KeyError:
        raise ValueError(f"axis must be 'space' or 'time', got {axis!r}") from None


def _fourier_magnitudes(values: np.ndarray, axis: int) -> np.ndarray:
    # Trapezoidal projection onto exp(-i 2 pi k s / L) over a closed interval of
    # n points: a DFT of length n-1 whose first sample is the endpoint average.
    v = np.moveaxis(values, axis, 0)
    n = v.shape[0]
    periodic = v[:-1].copy()
    periodic[0] = 0.5 * (v[0] + v[-1])
    coeffs = np.fft.rfft(periodic, axis=0)[: (n - 1) // 2 + 1] / (n - 1)
    return np.abs(coeffs)


def _profile(mags: np.ndarray, extent: float) -> SpectrumProfile:
    power = mags.mean(axis=1) if mags.ndim == 2 else mags
    top = power.max()
    if top > 0:
        power = power / top
    freqs = 2.0 * np.pi * np.arange(power.size) / extent
    return SpectrumProfile(freqs, power)


def power_spectrum(field: Field2D, axis="space") -> SpectrumProfile:
    """Fourier magnitude along one axis, averaged over the other, max-normalized.

    Frequencies are ``2*pi*k/L`` with ``L`` the extent ``(n-1)*delta`` of the axis.
    """
    ax = _axis_index(axis)
    n = field.shape[ax]
    if n < 4:
        raise ValueError(f"power spectrum needs at least 4 points along {axis}, got {n}")
    extent = field.L_x if ax == 0 else field.L_t
    return _profile(_fourier_magnitudes(field.values, ax), extent)


def envelope(n_points: int, power: int) -> np.ndarray:
    """``(s**2 - 1)**power`` on ``n_points`` evenly spaced nodes of [-1, 1]."""
    s = np.linspace(-1.0, 1.0, n_points)
    return (s * s - 1.0) ** power


def windowed_spectrum(field: Field2D, domain: IntegrationDomain, alpha: int, beta: int,
                      axis="space") -> SpectrumProfile:
    """Spectrum of ``u * (xbar**2-1)**alpha * (tbar**2-1)**beta`` on one domain.

    Frequencies are ``kappa_l = 2*pi*l/F_x`` (or ``omega_m = 2*pi*m/F_t``) with
    ``F = 2H`` the domain extent.
    """
    if alpha < 0 or beta < 0:
        raise ValueError("envelope powers must be non-negative")
    domain.check_fits(*field.shape)
    ax = _axis_index(axis)
    window = field.values[domain.x_slice, domain.t_slice]
    nx, nt = window.shape
    window = window * envelope(nx, alpha)[:, None] * envelope(nt, beta)[None, :]
    H_x, H_t = domain.half_widths(field.delta_x, field.delta_t)
    extent = 2 * H_x if ax == 0 else 2 * H_t
    return _profile(_fourier_magnitudes(window, ax), extent)


def mean_windowed_spectrum(field: Field2D, domains, alpha: int, beta: int,
                           axis="space") -> SpectrumProfile:
    """Average of the unnormalized windowed spectra over many domains, then normalized."""
    ax = _axis_index(axis)
    total = None
    for dom in domains:
        dom.check_fits(*field.shape)
        window = field.values[dom.x_slice, dom.t_slice]
        nx, nt = window.shape
        window = window * envelope(nx, alpha)[:, None] * envelope(nt, beta)[None, :]
        mags = _fourier_magnitudes(window, ax).mean(axis=1)
        total = mags if total is None else total + mags
    if total is None:
        raise ValueError("no domains given")
    H_x, H_t = domains[0].half_widths(field.delta_x, field.delta_t)
    return _profile(total, 2 * H_x if ax == 0 else 2 * H_t)


def _autocorrelation(values: np.ndarray) -> np.ndarray:
    """Normalized autocorrelation along axis 0, pooled over axis 1.

    Each lag is averaged over the overlapping pairs only.
    """
    v = values - values.mean()
    n = v.shape[0]
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(v, n=nfft, axis=0)
    acov = np.fft.irfft(f * np.conj(f), n=nfft, axis=0)[:n].sum(axis=1)
    acov /= np.arange(n, 0, -1)
    if acov[0] <= 0:
        raise ValueError("autocorrelation is undefined for a constant field")
    return acov / acov[0]


def _first_crossing(acf: np.ndarray, delta: float, level: float) -> float:
    below = np.nonzero(acf < level)[0]
    if below.size == 0:
        raise ValueError(
            f"autocorrelation never drops below {level:.3f}; the field is too "
            "small compared with its correlation scale"
        )
    j = int(below[0])
    a0, a1 = acf[j - 1], acf[j]
    return delta * (j - 1 + (a0 - level) / (a0 - a1))


def correlation_scales(field: Field2D) -> tuple[float, float]:
    """Correlation length and time: first lag where the autocorrelation drops below 1/e."""
    level = np.exp(-1.0)
    ell_x = _first_crossing(_autocorrelation(field.values), field.delta_x, level)
    ell_t = _first_crossing(_autocorrelation(field.values.T), field.delta_t, level)
    return ell_x, ell_t


# File format: 8-byte magic, little-endian uint32 version, two uint64 sizes,
# four float64 grid parameters, then n_x*n_t float64 values in row-major
# (x-major) order.
_MAGIC = b"WPDEFLD\x00"
_VERSION = 1
_HEADER = struct.Struct("<8sIQQdddd")


def write_field(field: Field2D, path) -> None:
    """Write ``field`` atomically to ``path`` in the binary field format."""
    header = _HEADER.pack(
        _MAGIC, _VERSION, field.n_x, field.n_t,
        field.delta_x, field.delta_t, field.origin_x, field.origin_t,
    )
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    os.replace(tmp, path)


def read_field(path) -> Field2D:
    """Read a field written by :func:`write_field`."""
    with open(path, "rb") as fh:
        data = fh.read()
    return _parse_field(data)


def _parse_field(data: bytes) -> Field2D:
    if len(data) < _HEADER.size:
        raise FieldFormatError(
            f"truncated header: expected {_HEADER.size} bytes, file ends at offset {len(data)}"
        )
    magic, version, n_x, n_t, dx, dt, ox, ot = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC:
        raise FieldFormatError("bad magic at offset 0: not a field file")
    if version != _VERSION:
        raise FieldFormatError(f"unsupported version {version} at offset 8")
    expected = _HEADER.size + 8 * n_x * n_t
    if len(data) != expected:
        raise FieldFormatError(
            f"header declares {n_x}x{n_t} values ending at offset {expected}, "
            f"but the data ends at offset {len(data)}"
        )
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    return Field2D(values.reshape(n_x, n_t), dx, dt, ox, ot)
