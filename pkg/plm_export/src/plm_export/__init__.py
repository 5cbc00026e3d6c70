"""Offline embedding exporter for the causality pipeline's cache format."""

from .export import ExportJob, export

__all__ = ["ExportJob", "export"]
__version__ = "0.1.0"
