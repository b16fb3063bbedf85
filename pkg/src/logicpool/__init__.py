"""logicpool: strategy-prompt ensembles over logic puzzles.

Generates and exactly solves knights-and-knaves and zebra puzzles, renders
the five strategy prompts, queries a logprob-returning backend (or a
deterministic mock), scores responses by probability / entropy / verifier
confidence, applies the merging criteria, and reports difficulty-stratified
accuracy.
"""

__version__ = "0.1.0"
