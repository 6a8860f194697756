"""Central repository and selection function for shared subnetwork services."""

__version__ = "0.1.0"
