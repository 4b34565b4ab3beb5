"""
Test package

**Purpose**: Python package marker
**Why Used**: Makes the test directory importable so tests share conftest fixtures
"""
