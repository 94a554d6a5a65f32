"""Signal conditioning: linear envelope and peak-centred windowing.

The linear envelope is

    clamp0( filtfilt(butter(order, cutoff), moving_average(|x|, L)) )

applied in exactly that order.  The moving average is centred and truncates
at the series ends (each edge output averages only the samples that exist).
``filtfilt`` runs the IIR filter forwards, reverses, runs it again and
reverses back (and averages with the mirror-image ordering, see
``filtfilt``); before filtering the series is extended at both ends by an
odd (point-symmetric) reflection of ``3 * (len(coeffs) - 1)`` samples and the
filter state starts at its step-response steady state scaled to the first
sample, so constant inputs pass through unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import (
    InvalidParams,
    InvalidWindowLen,
    NyquistViolation,
    SeriesTooShort,
    UnsupportedOrder,
    WindowTooLong,
)
from .types import ClassLabel, TimeSeries


@dataclass(frozen=True)
class FilterCoeffs:
    order: int
    cutoff_hz: float
    numerator: np.ndarray
    denominator: np.ndarray

    @property
    def b(self) -> np.ndarray:
        return self.numerator

    @property
    def a(self) -> np.ndarray:
        return self.denominator

    def dc_gain(self) -> float:
        return float(self.numerator.sum() / self.denominator.sum())

    def frequency_response(self, freq_hz, sampling_rate_hz: float) -> np.ndarray:
        """Complex single-pass response ``H(e^{jw})`` at the given frequencies."""
        w = 2.0 * np.pi * np.asarray(freq_hz, dtype=np.float64) / sampling_rate_hz
        z_inv = np.exp(-1j * w)
        num = np.polyval(self.numerator[::-1], z_inv)
        den = np.polyval(self.denominator[::-1], z_inv)
        return num / den


@dataclass(frozen=True)
class EnvelopeParams:
    moving_average_len: int = 101
    filter_order: int = 2
    cutoff_hz: float = 50.0

    def check(self, sampling_rate: float) -> None:
        if self.moving_average_len < 1 or self.moving_average_len % 2 == 0:
            raise InvalidWindowLen(f"moving_average_len must be odd and >= 1, got {self.moving_average_len}")
        if not 0 < self.cutoff_hz < sampling_rate / 2:
            raise NyquistViolation(
                f"cutoff {self.cutoff_hz} Hz outside (0, {sampling_rate / 2}) for fs={sampling_rate}"
            )


@dataclass
class Window:
    source_id: str
    start_index: int
    samples: np.ndarray
    label: Optional[ClassLabel] = None
    peak_index: int = -1

    @property
    def window_id(self) -> str:
        return f"{self.source_id}@{self.start_index}"

    def __len__(self) -> int:
        return self.samples.size


def rectify(ts: TimeSeries) -> TimeSeries:
    return ts.with_samples(np.abs(ts.samples))


def moving_average(ts: TimeSeries, window_len: int) -> TimeSeries:
    if window_len < 1 or window_len % 2 == 0:
        raise InvalidWindowLen(f"window_len must be odd and >= 1, got {window_len}")
    x = ts.samples
    n = x.size
    half = window_len // 2
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return ts.with_samples((csum[hi] - csum[lo]) / (hi - lo))


def butterworth_design(order: int, cutoff_hz: float, sampling_rate_hz: float) -> FilterCoeffs:
    """Digital low-pass Butterworth filter.

    The analog prototype poles ``exp(j*pi*(2k + n - 1) / (2n))`` are scaled to
    the pre-warped cutoff ``2 fs tan(pi fc / fs)`` and mapped through the
    bilinear transform; all ``n`` zeros land at ``z = -1``.  The gain is set
    so the response at DC is exactly one.
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= 8:
        raise UnsupportedOrder(f"order must be an integer in [1, 8], got {order!r}")
    fs = float(sampling_rate_hz)
    if not 0 < cutoff_hz < fs / 2:
        raise NyquistViolation(f"cutoff {cutoff_hz} Hz outside (0, {fs / 2}) for fs={fs}")
    k = np.arange(1, order + 1)
    analog = np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    warped = 2.0 * fs * math.tan(math.pi * cutoff_hz / fs)
    s = analog * warped
    z = (2.0 * fs + s) / (2.0 * fs - s)
    a = np.real(np.poly(z))
    b = np.real(np.poly(-np.ones(order)))
    b = b * (a.sum() / b.sum())
    return FilterCoeffs(int(order), float(cutoff_hz), b, a)


def is_stable(coeffs: FilterCoeffs) -> bool:
    return bool(np.all(np.abs(np.roots(coeffs.denominator)) < 1.0))


@numba.njit(cache=True)
def _lfilter(b, a, x, zi):
    # transposed direct form II, a[0] == 1
    n = x.size
    order = zi.size
    state = zi.copy()
    y = np.empty(n)
    for t in range(n):
        xt = x[t]
        yt = b[0] * xt + (state[0] if order > 0 else 0.0)
        for i in range(order - 1):
            state[i] = b[i + 1] * xt + state[i + 1] - a[i + 1] * yt
        if order > 0:
            state[order - 1] = b[order] * xt - a[order] * yt
        y[t] = yt
    return y


def lfilter_zi(coeffs: FilterCoeffs) -> np.ndarray:
    """Initial state for which a unit step input produces a unit step output."""
    b, a = _aligned(coeffs)
    m = a.size - 1
    if m == 0:
        return np.zeros(0)
    companion = np.zeros((m, m))
    companion[:, 0] = -a[1:]
    companion[: m - 1, 1:] = np.eye(m - 1)
    rhs = b[1:] - a[1:] * b[0]
    return np.linalg.solve(np.eye(m) - companion, rhs)


def _aligned(coeffs: FilterCoeffs) -> tuple[np.ndarray, np.ndarray]:
    b = np.asarray(coeffs.numerator, dtype=np.float64)
    a = np.asarray(coeffs.denominator, dtype=np.float64)
    size = max(a.size, b.size)
    b = np.pad(b, (0, size - b.size)) / a[0]
    a = np.pad(a, (0, size - a.size)) / a[0]
    return b, a


def lfilter(coeffs: FilterCoeffs, x, zi=None) -> np.ndarray:
    b, a = _aligned(coeffs)
    state = np.zeros(a.size - 1) if zi is None else np.asarray(zi, dtype=np.float64)
    return _lfilter(b, a, np.ascontiguousarray(x, dtype=np.float64), state)


def _forward_backward(coeffs: FilterCoeffs, ext: np.ndarray, zi: np.ndarray) -> np.ndarray:
    y = lfilter(coeffs, ext, zi * ext[0])
    return lfilter(coeffs, y[::-1], zi * y[-1])[::-1]


def filtfilt(coeffs: FilterCoeffs, ts: TimeSeries, symmetric: bool = True) -> TimeSeries:
    """Zero-phase filtering with effective magnitude response ``|H|^2``.

    With ``symmetric=True`` the result is the mean of the forward-backward
    and the backward-forward orderings.  The two differ only in edge
    transients, and their mean makes the operation commute exactly with time
    reversal.  ``symmetric=False`` returns the forward-backward ordering
    alone.
    """
    x = ts.samples
    ntaps = max(coeffs.numerator.size, coeffs.denominator.size)
    if x.size < 3 * ntaps:
        raise SeriesTooShort(f"filtfilt needs at least {3 * ntaps} samples, got {x.size}")
    pad = 3 * (ntaps - 1)
    ext = np.concatenate(
        [2.0 * x[0] - x[pad:0:-1], x, 2.0 * x[-1] - x[-2 : -pad - 2 : -1]]
    )
    zi = lfilter_zi(coeffs)
    y = _forward_backward(coeffs, ext, zi)
    if symmetric:
        y = 0.5 * (y + _forward_backward(coeffs, ext[::-1].copy(), zi)[::-1])
    return ts.with_samples(y[pad : pad + x.size].copy())


def linear_envelope(ts: TimeSeries, params: EnvelopeParams = EnvelopeParams()) -> TimeSeries:
    params.check(ts.sampling_rate)
    coeffs = butterworth_design(params.filter_order, params.cutoff_hz, ts.sampling_rate)
    smoothed = moving_average(rectify(ts), params.moving_average_len)
    env = filtfilt(coeffs, smoothed)
    return env.with_samples(np.maximum(env.samples, 0.0))


def _local_maxima(x: np.ndarray) -> np.ndarray:
    """Indices of peaks; a plateau reports its first sample, ends count one-sided."""
    n = x.size
    if n == 1:
        return np.array([0])
    left = np.empty(n, bool)
    right = np.empty(n, bool)
    left[0] = True
    left[1:] = x[1:] > x[:-1]
    # a plateau's first sample is a peak if the plateau eventually descends
    nxt = np.empty(n)
    nxt[-1] = -np.inf
    change = np.flatnonzero(np.diff(x) != 0)
    # value of the first differing sample to the right of each index
    j = np.searchsorted(change, np.arange(n), side="left")
    has = j < change.size
    nxt[has] = x[change[j[has]] + 1]
    nxt[~has] = -np.inf
    right[:] = nxt < x
    return np.flatnonzero(left & right)


def detect_windows(
    ts: TimeSeries,
    window_len: int = 200,
    threshold: Optional[float] = None,
    quantile: float = 0.95,
) -> list[Window]:
    """Peak-centred windows over the rectified series.

    Peaks above the threshold (absolute when given, else the ``quantile`` of
    the rectified samples) are visited by descending height, ties by lower
    index.  Each proposes ``[peak - window_len // 2, + window_len)`` shifted
    to fit inside the series, and is kept only if that span overlaps no
    window already kept.  Away from the series ends this is the same as
    suppressing peaks closer than ``window_len`` to a kept one.
    """
    x = np.abs(ts.samples)
    n = x.size
    if window_len < 1:
        raise InvalidParams(f"window_len must be positive, got {window_len}")
    if window_len > n:
        raise WindowTooLong(f"window of {window_len} samples exceeds series of {n}")
    if threshold is None:
        if not 0.0 <= quantile <= 1.0:
            raise InvalidParams(f"quantile must lie in [0, 1], got {quantile}")
        level = float(np.quantile(x, quantile))
    else:
        if not threshold > 0:
            raise InvalidParams(f"threshold must be positive, got {threshold}")
        level = float(threshold)
    peaks = _local_maxima(x)
    peaks = peaks[x[peaks] > level]
    order = np.lexsort((peaks, -x[peaks]))
    starts: list[int] = []
    kept: list[int] = []
    for p in peaks[order]:
        start = min(max(int(p) - window_len // 2, 0), n - window_len)
        if all(abs(start - s) >= window_len for s in starts):
            starts.append(start)
            kept.append(int(p))
    out = [
        Window(ts.source_id, s, ts.samples[s : s + window_len].copy(), ts.label, p)
        for s, p in zip(starts, kept)
    ]
    out.sort(key=lambda w: w.start_index)
    return out
