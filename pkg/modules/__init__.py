"""
Modules Package Initialization
Exposes key modules for easy importing.
"""

from modules import validator
from modules import model
from modules import charpoly
from modules import spectra
from modules import locus
from modules import placement
from modules import regions
from modules import sensitivity
from modules import valuation
from modules import data_loader
from modules import exporter
from modules import system_generator

__all__ = [
    'validator',
    'model',
    'charpoly',
    'spectra',
    'locus',
    'placement',
    'regions',
    'sensitivity',
    'valuation',
    'data_loader',
    'exporter',
    'system_generator',
]
