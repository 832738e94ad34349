"""Rolling-horizon market bidding and operation for a PEM hydrogen plant."""

__version__ = "0.1.0"
