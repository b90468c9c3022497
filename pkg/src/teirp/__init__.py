"""Branch-and-price solver for the two-echelon inventory-routing problem."""

from teirp.model import Instance, read_instance, write_instance

__all__ = ["Instance", "read_instance", "write_instance"]
__version__ = "0.1.0"
