"""
Test package for eswap-simulator
"""
