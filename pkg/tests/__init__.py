"""
Test package for Radial Deep Nets.
"""
