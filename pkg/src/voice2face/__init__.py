"""Self-supervised voice/face matching and speech-conditioned face generation.

Two stages: (1) speech and face encoders trained with K-way cross-modal
identity matching, (2) a conditional GAN that reuses those encoders to
generate and discriminate faces conditioned on speech embeddings.
"""

__version__ = "0.1.0"

EMBED_DIM = 128
