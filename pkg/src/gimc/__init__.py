"""Document-level, zero-shot cross-lingual event causality identification.

Pipeline: informative-phrase extraction from dependency trees, a
heterogeneous interaction graph processed by multi-head GATv2 with manual
gradients, multi-granularity contrastive transfer with code-switching
augmentation, and a train/evaluate/report harness.
"""

__version__ = "0.1.0"
