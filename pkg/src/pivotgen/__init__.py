"""Two-stage low-resource table-to-text generation toolkit.

Stage 1 tags which table tokens are key facts; stage 2 realizes a fluent
description from the selected facts. Unlabeled text is leveraged through
pseudo-parallel pairs (content words -> full sentence), and drop/insert
noise on realizer inputs softens error propagation between the stages.
"""

__version__ = "0.1.0"
