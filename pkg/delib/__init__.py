"""
Delib - Deliberation and Multi-Winner Voting Simulator
========================================================

A seedable Monte-Carlo simulator of how group deliberation changes
the outcomes of approval-based committee elections.

Features:
  - Two-bloc Mallows electorates with cardinal utilities
  - Exact AV, CC, PAV and Method of Equal Shares committees
  - EJR / PJR verification with violation witnesses
  - Bounded-confidence deliberation under six group-formation strategies
  - Welfare, representation and consensus metrics with paired significance tests
  - Byte-reproducible CSV records, text reports and SVG figures
"""

__version__ = "1.0.0"
