"""Tournament server for math competitions played alongside an unreliable AI.

Teams solve problems while querying an AI assistant whose answers are
deliberately corrupted at configurable rates; scoring rewards catching the
corruption and punishes trusting it.  The package ships the engine, the
fault-injecting proxy with its truth ledger, an exact rational expression
evaluator, an append-only replayable journal, an HTTP api with live feeds,
and an admin CLI with scripted-bot simulation.
"""

__version__ = "0.1.0"
