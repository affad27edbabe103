import type { PendingAnnotation, Progress, RogueCandidatesPage, TopicCard } from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`HTTP ${status}: ${JSON.stringify(detail)}`);
  }
}

/** Thin typed client over the annotation service JSON API. */
export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private readonly base = '',
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      throw new ApiError(response.status, body && (body as { detail?: unknown }).detail);
    }
    return body as T;
  }

  getTopics(): Promise<TopicCard[]> {
    return this.request('/topics');
  }

  getTopicTweets(topicId: number, offset: number, limit: number) {
    return this.request<{ total: number; tweets: TopicCard['sample_tweets'] }>(
      `/topics/${topicId}/tweets?offset=${offset}&limit=${limit}`,
    );
  }

  getRogueCandidates(offset: number, limit: number): Promise<RogueCandidatesPage> {
    return this.request(`/tweets/rogue-candidates?offset=${offset}&limit=${limit}`);
  }

  getProgress(): Promise<Progress> {
    return this.request('/progress');
  }

  /** POST one annotation; resolves on service acknowledgement (201). */
  async submit(annotation: PendingAnnotation): Promise<void> {
    const path = annotation.kind === 'topic' ? '/annotations/topic' : '/annotations/tweet';
    const body =
      annotation.kind === 'topic'
        ? {
            topic_id: Number(annotation.itemId),
            label: annotation.label,
            annotator_id: annotation.annotatorId,
            nonce: annotation.nonce,
          }
        : {
            tweet_id: annotation.itemId,
            label: annotation.label,
            annotator_id: annotation.annotatorId,
            nonce: annotation.nonce,
          };
    await this.request(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }
}
