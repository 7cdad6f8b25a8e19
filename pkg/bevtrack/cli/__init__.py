"""
Command-line surface: subcommands, run manifests, worker pool and plots.
"""
from .main import build_parser, main

__all__ = ['build_parser', 'main']
