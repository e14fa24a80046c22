"""
Disentangled CMS Monitor source package.
"""
