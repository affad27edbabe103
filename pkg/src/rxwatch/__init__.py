"""rxwatch: detect social-media promotion of illicit online pharmacies.

Pipeline stages: ingest keyword-filtered tweet streams, summarize them
with a biterm topic model, route topic and tweet annotation through human
reviewers, isolate rogue tweets by dominant topic, characterize rogue vs.
regular populations over 13 metadata features, and train/evaluate a
logistic-regression classifier.
"""

__version__ = "0.1.0"
