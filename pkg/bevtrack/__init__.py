"""
Desk-scale multi-camera 3D multi-object tracking by query propagation.
"""

__version__ = "0.4.0"
