"""
Event delivery to subscribers.

Events are queued and handed out by one daemon thread, so delivery never blocks
the orchestrator and events of a slice reach each subscriber in publish order.
Webhook delivery is at-least-once with a bounded number of attempts; failures
are logged and dropped.
"""

import logging
import queue
import threading
import time
import uuid
from typing import Callable, Dict, List, Optional

import requests

from app.models.requests import SliceEvent, Subscription, SubscriptionRequest

logger = logging.getLogger(__name__)

Listener = Callable[[SliceEvent], None]

_STOP = object()


class Notifier:
    """
    Args:
        max_attempts: webhook POST attempts per event
        timeout_s: per-attempt HTTP timeout
        retry_delay_s: pause between attempts
        session: requests session (injectable for tests)
    """

    def __init__(
        self,
        max_attempts: int = 3,
        timeout_s: float = 2.0,
        retry_delay_s: float = 0.2,
        session: Optional[requests.Session] = None,
    ):
        self.max_attempts = max(1, max_attempts)
        self.timeout_s = timeout_s
        self.retry_delay_s = retry_delay_s
        self.session = session or requests.Session()
        self._subscriptions: Dict[str, Subscription] = {}
        self._listeners: Dict[str, Listener] = {}
        self._lock = threading.Lock()
        self._queue: "queue.Queue" = queue.Queue()
        self._thread = threading.Thread(target=self._run, name="s3-notifier", daemon=True)
        self._thread.start()

    # ------------------------------------------------------------------
    # Registration
    # ------------------------------------------------------------------

    def subscribe(self, request: SubscriptionRequest, owner: Optional[str] = None) -> Subscription:
        subscription = Subscription(subscription_id=uuid.uuid4().hex, owner=owner, **request.model_dump())
        with self._lock:
            self._subscriptions[subscription.subscription_id] = subscription
        logger.info("subscription added id=%s kind=%s", subscription.subscription_id, subscription.kind)
        return subscription

    def unsubscribe(self, subscription_id: str, owner: Optional[str] = None) -> bool:
        """With an owner, only that tenant's subscriptions can be removed"""
        with self._lock:
            if owner is not None:
                found = self._subscriptions.get(subscription_id)
                if found is None or found.owner != owner:
                    return False
            removed = self._subscriptions.pop(subscription_id, None) or self._listeners.pop(subscription_id, None)
        return removed is not None

    def add_listener(self, listener: Listener) -> str:
        """In-process subscriber; returns an id usable with unsubscribe"""
        listener_id = uuid.uuid4().hex
        with self._lock:
            self._listeners[listener_id] = listener
        return listener_id

    def subscriptions(self) -> List[Subscription]:
        with self._lock:
            return list(self._subscriptions.values())

    # ------------------------------------------------------------------
    # Delivery
    # ------------------------------------------------------------------

    def publish(self, event: SliceEvent) -> None:
        self._queue.put(event)

    def flush(self) -> None:
        """Block until every published event has been handed out"""
        self._queue.join()

    def close(self) -> None:
        self._queue.put(_STOP)
        self._thread.join(timeout=5)

    def _run(self) -> None:
        while True:
            item = self._queue.get()
            try:
                if item is _STOP:
                    return
                self._deliver(item)
            except Exception:
                logger.exception("event delivery crashed")
            finally:
                self._queue.task_done()

    def _deliver(self, event: SliceEvent) -> None:
        with self._lock:
            subscriptions = list(self._subscriptions.values())
            listeners = list(self._listeners.values())

        for listener in listeners:
            try:
                listener(event)
            except Exception as e:
                logger.warning("listener failed for event seq=%d: %s", event.seq, e)

        for subscription in subscriptions:
            if subscription.slice_id is not None and subscription.slice_id != event.slice_id:
                continue
            if subscription.kind == "log":
                logger.info(
                    "event seq=%d slice=%s kind=%s %s->%s",
                    event.seq, event.slice_id, event.kind.value,
                    event.old_state.value if event.old_state else "-",
                    event.new_state.value if event.new_state else "-",
                )
            else:
                self._post(subscription, event)

    def _post(self, subscription: Subscription, event: SliceEvent) -> bool:
        body = event.model_dump(mode="json")
        for attempt in range(1, self.max_attempts + 1):
            try:
                response = self.session.post(str(subscription.url), json=body, timeout=self.timeout_s)
                response.raise_for_status()
                return True
            except requests.RequestException as e:
                logger.warning(
                    "webhook delivery failed subscription=%s attempt=%d/%d: %s",
                    subscription.subscription_id, attempt, self.max_attempts, e,
                )
                if attempt < self.max_attempts:
                    time.sleep(self.retry_delay_s)
        return False
