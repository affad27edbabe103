import { ApiError, type ApiClient } from './api.js';
import type { PendingAnnotation } from './types.js';

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const STORAGE_KEY = 'rxwatch.pending-annotations';

export function makeNonce(): string {
  return `${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}

/**
 * Pending-annotation queue with at-least-once delivery and client nonces.
 *
 * An annotation stays queued (and persisted) until the service acknowledges
 * it; the nonce makes retried deliveries idempotent server-side.  A 4xx
 * response other than 429 is a permanent rejection: the item is dropped and
 * reported rather than retried forever.
 */
export class PendingQueue {
  private items: PendingAnnotation[] = [];
  private flushing = false;
  onChange: (pending: number) => void = () => {};
  onRejected: (item: PendingAnnotation, error: unknown) => void = () => {};

  constructor(
    private readonly api: Pick<ApiClient, 'submit'>,
    private readonly storage: StorageLike | null = null,
    private readonly backoffMs = (attempt: number) => Math.min(8000, 250 * 2 ** attempt),
    private readonly sleep: (ms: number) => Promise<void> = (ms) =>
      new Promise((resolve) => setTimeout(resolve, ms)),
  ) {
    this.restore();
  }

  get pending(): readonly PendingAnnotation[] {
    return this.items;
  }

  private restore(): void {
    const raw = this.storage?.getItem(STORAGE_KEY);
    if (!raw) return;
    try {
      const parsed = JSON.parse(raw) as PendingAnnotation[];
      if (Array.isArray(parsed)) this.items = parsed;
    } catch {
      this.storage?.removeItem(STORAGE_KEY);
    }
  }

  private persist(): void {
    if (!this.storage) return;
    if (this.items.length === 0) {
      this.storage.removeItem(STORAGE_KEY);
    } else {
      this.storage.setItem(STORAGE_KEY, JSON.stringify(this.items));
    }
    this.onChange(this.items.length);
  }

  /** Queue one annotation; requires a nonempty annotator id. */
  enqueue(item: Omit<PendingAnnotation, 'nonce'> & { nonce?: string }): PendingAnnotation {
    if (!item.annotatorId.trim()) {
      throw new Error('annotator id must be set before submitting');
    }
    const queued: PendingAnnotation = { ...item, nonce: item.nonce ?? makeNonce() };
    // latest choice wins: replace any queued annotation for the same item
    this.items = this.items.filter(
      (existing) =>
        !(
          existing.kind === queued.kind &&
          existing.itemId === queued.itemId &&
          existing.annotatorId === queued.annotatorId
        ),
    );
    this.items.push(queued);
    this.persist();
    return queued;
  }

  private async deliver(
    item: PendingAnnotation,
    maxAttempts: number,
  ): Promise<'acked' | 'rejected' | 'unreachable'> {
    let lastError: unknown;
    for (let attempt = 0; attempt < maxAttempts; attempt += 1) {
      try {
        await this.api.submit(item);
        return 'acked';
      } catch (error) {
        const permanent =
          error instanceof ApiError && error.status >= 400 && error.status < 500 && error.status !== 429;
        if (permanent) {
          this.onRejected(item, error);
          return 'rejected';
        }
        lastError = error;
        if (attempt + 1 < maxAttempts) {
          await this.sleep(this.backoffMs(attempt));
        }
      }
    }
    void lastError;
    return 'unreachable';
  }

  /**
   * Deliver queued annotations in order.  Transient failures retry with
   * backoff up to maxAttempts per item; if the service stays unreachable
   * the queue is left intact for the next flush.
   */
  async flush(maxAttempts = 5): Promise<number> {
    if (this.flushing) return 0;
    this.flushing = true;
    let delivered = 0;
    try {
      while (this.items.length > 0) {
        const outcome = await this.deliver(this.items[0], maxAttempts);
        if (outcome === 'unreachable') break;
        this.items.shift();
        this.persist();
        if (outcome === 'acked') delivered += 1;
      }
    } finally {
      this.flushing = false;
    }
    return delivered;
  }
}
