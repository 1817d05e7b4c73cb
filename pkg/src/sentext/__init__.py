"""Sentiment analysis from text descriptions of speech and facial cues.

Pitch and energy change patterns plus appeared facial action units are
rendered as short sentences, combined with the transcript, and sent to a
chat-completion service whose free-text answer is parsed into a binary
sentiment class; evaluation runs participant-independent cross-validation
scored by macro-F1.
"""

__version__ = "0.1.0"
