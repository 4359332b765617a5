"""
Integration tests
"""
