"""Unit conversions between the interface layer and SI.

Everything inside the integrators runs in SI (kg, m, N*m, rad, s). Public
dataclasses and files use the lab units below.
"""
import math

G_STANDARD = 9.80665  # m/s^2

MG = 1e-6  # kg
MM = 1e-3  # m
UNM = 1e-6  # N*m
MG_MM2 = 1e-12  # kg*m^2

RAD_PER_DEG = math.pi / 180.0
DEG_PER_RAD = 180.0 / math.pi


def per_deg_to_per_rad(value):
    """Convert a stiffness given per degree into per radian."""
    return value * DEG_PER_RAD


def per_rad_to_per_deg(value):
    return value * RAD_PER_DEG


def weight_torque_unm(mass_mg, lever_mm, g=G_STANDARD):
    """Torque in uNm of a point mass hanging at a lever arm."""
    return mass_mg * MG * g * lever_mm * MM / UNM
