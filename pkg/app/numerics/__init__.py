"""Numerical building blocks: normal special functions, binomial bounds, radii, Lipschitz constants, PUB"""
