"""Low-energy Trotter simulation of k-local spin Hamiltonians."""

__version__ = "0.1.0"
