"""
twinnav: head digital-twin navigation toolkit.

Radiance-field head models, landmark-based head pose tracking and tool
registration, verified end to end against synthetic ground truth.
"""

__version__ = "0.1.0"
