"""Shipped data fixtures: demo seed, issuer rules, journey profiles, scenarios."""
