"""Word Mover's Distance and its variants over exact optimal transport."""

from .bench import Corpus, EvalConfig, EvalReport, evaluate, knn_predict, load_corpus, select_k
from .embeddings import EmbeddingTable, load_binary_word2vec, load_embeddings, load_text_embeddings
from .errors import WordMoverError
from .geometry import FisherMatrix, Geometry, GeometryKind, build_cost_matrix
from .measures import Document, WeightedBow, build_idf, build_nbow
from .ot import CostMatrix, DiscreteMeasure, TransportPlan, brute_force_emd, solve_emd
from .similarity import Variant, VariantKind, distance_matrix, document_distance

__version__ = "0.1.0"
