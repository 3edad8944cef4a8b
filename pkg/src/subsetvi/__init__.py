"""Restricted value iteration for POMDPs."""
