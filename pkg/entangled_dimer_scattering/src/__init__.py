"""
Entangled Dimer Scattering - wave-packet neutron cross-sections for a spin dimer
"""

__version__ = "1.0.0"
