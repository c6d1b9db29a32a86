"""Unit helpers. Internally everything is SI: angular frequency in rad/s, time in s."""

import math

TWO_PI = 2.0 * math.pi
HBAR = 1.054571817e-34
KB = 1.380649e-23


def mhz(f):
    """Ordinary frequency in MHz -> angular frequency in rad/s."""
    return TWO_PI * 1e6 * f


def ghz(f):
    return TWO_PI * 1e9 * f


def to_mhz(omega):
    return omega / (TWO_PI * 1e6)


def to_ghz(omega):
    return omega / (TWO_PI * 1e9)


def ns(t):
    return 1e-9 * t


def to_ns(t):
    return 1e9 * t
