"""Version information for microlang"""

__version__ = "0.1.0"
