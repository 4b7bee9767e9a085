"""LLM-assisted story-structure annotation for spoken Mandarin narratives.

Parse CHAT transcripts, prompt a chat-completion model for per-element line
positions, score story structure, measure inter-rater agreement with Cohen's
kappa, and run a human verification service.
"""

__version__ = "0.1.0"
