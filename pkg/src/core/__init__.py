"""Core layer - Domain models, errors, frontier algebra and pricing tests"""
