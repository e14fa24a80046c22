"""
Configuration module for the Disentangled CMS Monitor.
"""
