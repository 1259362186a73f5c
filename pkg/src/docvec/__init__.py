"""docvec: composite document vectors from scratch.

Tokenized corpora -> tf-idf and negative-sampling embeddings (word and
paragraph vectors) -> idf-graded composition -> linear SVM / RNN language
model classification with soft-vote ensembling.
"""

__version__ = "0.1.0"
