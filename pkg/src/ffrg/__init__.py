"""Field extraction from form-like documents without manual labels.

The pipeline mines word-level pseudo-labels from OCR output with a
string-distance + geometry rule engine, trains a small token classifier
under a progressive label-ensemble scheme, and evaluates end-to-end value
extraction with exact-match macro F1.
"""

__version__ = "0.1.0"
