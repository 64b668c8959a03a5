"""Data layer - Panel I/O, panel operations, model specs, calibration and config"""
