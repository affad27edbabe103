export const TOPIC_LABELS = ['Relevant', 'Irrelevant', 'NeedsInvestigation'] as const;
export const TWEET_LABELS = ['Rogue', 'NonRogue'] as const;

export type TopicLabel = (typeof TOPIC_LABELS)[number];
export type TweetLabel = (typeof TWEET_LABELS)[number];

export interface WordProb {
  word: string;
  probability: number;
}

export interface AnnotationEcho {
  annotator_id: string;
  label: string;
}

export interface SampleTweet {
  tweet_id: string;
  dominant_topic: number;
  dominant_share: number;
  text?: string;
  has_url?: boolean;
  retweet_count?: number;
  favorite_count?: number;
  user_followers_count?: number;
  user_friends_count?: number;
  user_statuses_count?: number;
  annotations?: AnnotationEcho[];
}

export interface TopicCard {
  topic_id: number;
  top_words: WordProb[];
  sample_tweets: SampleTweet[];
  annotations: AnnotationEcho[];
}

export interface RogueCandidatesPage {
  total: number;
  offset: number;
  rogue_topics: number[];
  tweets: SampleTweet[];
}

export interface Progress {
  topics: { total: number; annotated: number; remaining: number };
  tweets: { candidates: number; annotated: number; remaining: number };
  agreement: { topics: number | null; tweets: number | null };
  rogue_precision_live: number | null;
}

export interface PendingAnnotation {
  kind: 'topic' | 'tweet';
  itemId: string;
  label: string;
  annotatorId: string;
  nonce: string;
}
