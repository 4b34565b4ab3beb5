"""
6DMA secure beamforming simulator

**Purpose**: Python package marker for the simulator modules
**Why Used**: Makes `src` importable as a package (tests import `src.<module>`)
"""
