"""
Command line package for fdrmix
"""
