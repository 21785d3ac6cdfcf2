"""Oracles shared by several test modules."""

import numpy as np


def shifted(image, dx, dy):
    """Periodic sub-pixel translation by Fourier phase shift (oracle, independent of synth)."""
    h, w = image.shape
    kx = np.fft.fftfreq(w)[None, :]
    ky = np.fft.fftfreq(h)[:, None]
    return np.fft.ifft2(np.fft.fft2(image) * np.exp(-2j * np.pi * (kx * dx + ky * dy))).real
