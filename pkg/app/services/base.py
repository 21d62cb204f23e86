"""Abstract base for batch services that run one independent job per item."""

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional
import logging

logger = logging.getLogger(__name__)


class BaseBatchService(ABC):
    """Template method pattern: items -> process each -> collect, never abort the batch."""

    def __init__(self, workers: int = 1):
        self.logger = logger
        self.workers = max(1, workers)

    @abstractmethod
    def get_items(self) -> list:
        """Items to process, in output order."""
        pass

    @abstractmethod
    def process_item(self, item: Any) -> Any:
        """Compute the result for one item; may raise."""
        pass

    @abstractmethod
    def on_failure(self, item: Any, error: Exception) -> Any:
        """Result recorded for an item whose processing raised."""
        pass

    def is_success(self, result: Any) -> bool:
        return True

    def _run_one(self, indexed: tuple) -> Any:
        idx, item, total = indexed
        item_id = self._get_item_id(item)
        self.logger.info(f"[{idx}/{total}] Processing {item_id}")
        try:
            result = self.process_item(item)
            if self.is_success(result):
                self.logger.info(f"✓ {item_id}")
            else:
                self.logger.warning(f"✗ {item_id} finished with a flagged result")
            return result
        except Exception as e:
            self.logger.error(f"✗ Error processing {item_id}: {e}")
            return self.on_failure(item, e)

    def process(self) -> Dict[str, Any]:
        """Process every item; results keep item order whatever the worker count."""
        items = self.get_items()
        total = len(items)
        self.logger.info(f"Starting processing for {total} items")

        indexed = [(idx, item, total) for idx, item in enumerate(items, 1)]
        if self.workers > 1 and total > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                results: List[Any] = list(executor.map(self._run_one, indexed))
        else:
            results = [self._run_one(entry) for entry in indexed]

        processed = sum(1 for r in results if self.is_success(r))
        failed = total - processed
        self.logger.info(f"Processing complete: {processed} processed, {failed} failed out of {total} total")

        return {
            "total": total,
            "processed": processed,
            "failed": failed,
            "results": results,
        }

    def _get_item_id(self, item: Any) -> str:
        """Best-effort identifier used for logging context."""
        if hasattr(item, "model_id"):
            return str(item.model_id)
        if isinstance(item, dict):
            return str(item.get("id", "unknown"))
        return str(item)
