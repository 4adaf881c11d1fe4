from app.schemas.bounds import BinomialObservation, CertifiedRadius, ConfidenceBound, TopTwoProbabilities
from app.schemas.counts import ClassCounts, CountsRecord
from app.schemas.layers import LayerSpec

__all__ = [
    "BinomialObservation",
    "CertifiedRadius",
    "ConfidenceBound",
    "TopTwoProbabilities",
    "ClassCounts",
    "CountsRecord",
    "LayerSpec",
]
