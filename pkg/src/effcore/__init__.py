"""Workbench for a deep effect-handler calculus."""
