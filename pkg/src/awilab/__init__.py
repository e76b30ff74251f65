"""Waveform-misfit analysis toolkit: synthetic transmission data, regularized
matching filters, adaptive/matched-source/least-squares objectives and
verification harnesses for their small-wavelength limits."""

__version__ = "0.1.0"
