"""
Test package for the complexity-driven ECOC toolkit.
"""
