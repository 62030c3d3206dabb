"""Steady states of the forced fractional SQG equation on a periodic box."""
