"""Train classifiers on exported description corpora.

Two model families: a bidirectional text encoder with a one-hidden-layer
classification head (CLS or mean pooling, frozen or fine-tuned), and four
feed-forward baselines over per-modality feature vectors.  Inputs are the
exporter's JSONL rows, a split plan JSON, and feature CSVs; outputs are a
run,fold,config,f1 CSV plus a JSON report.
"""

__version__ = "0.1.0"
