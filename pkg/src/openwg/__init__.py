"""Open-waveguide Helmholtz scattering via complexified boundary integral equations."""

__version__ = "0.1.0"
