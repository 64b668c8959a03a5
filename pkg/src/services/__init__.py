"""Service layer - Stepwise selection, evaluation, bootstrap and simulation"""
