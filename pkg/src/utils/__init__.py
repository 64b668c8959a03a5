"""Core utilities - Logging, error queue, serialization, workers and reports"""
