"""himax - hierarchical infomax filter learning on image patches."""

__version__ = "0.1.0"
