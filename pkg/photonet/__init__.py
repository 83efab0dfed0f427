"""photonet: scattering-matrix simulator for interferometric optical networks."""

__version__ = "0.1.0"
