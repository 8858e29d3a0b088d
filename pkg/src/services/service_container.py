# Local application imports
from src.database.dataset_store import DatasetStore
from src.services.embedding_service import EmbeddingService
from src.services.similarity_service import SimilarityService


class ServiceContainer:
    def __init__(self):
        self.store = DatasetStore()
        self.embedder = EmbeddingService()
        self.similarity = SimilarityService(embedder=self.embedder)

    def close(self):
        """Release provider resources"""
        self.embedder.close()
