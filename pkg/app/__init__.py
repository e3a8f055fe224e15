"""
Annulus Extremal Engine - Main Application Package
"""

__version__ = "1.0.0"
__author__ = "Annulus Extremal Engine"
