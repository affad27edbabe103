import type { View } from './state.js';
import type { TopicLabel, TweetLabel } from './types.js';

export type KeyAction =
  | { type: 'topic-label'; label: TopicLabel }
  | { type: 'tweet-label'; label: TweetLabel }
  | { type: 'submit-focused' }
  | { type: 'move'; delta: number }
  | { type: 'switch-view'; view: View }
  | { type: 'next-page' }
  | { type: 'prev-page' };

const TOPIC_KEYS: Record<string, TopicLabel> = {
  '1': 'Relevant',
  r: 'Relevant',
  '2': 'Irrelevant',
  i: 'Irrelevant',
  '3': 'NeedsInvestigation',
  u: 'NeedsInvestigation',
};

const TWEET_KEYS: Record<string, TweetLabel> = {
  '1': 'Rogue',
  r: 'Rogue',
  '2': 'NonRogue',
  n: 'NonRogue',
};

const EDITABLE_TAGS = new Set(['INPUT', 'TEXTAREA', 'SELECT']);

export function isTypingTarget(target: { tagName?: string; isContentEditable?: boolean } | null): boolean {
  if (!target) return false;
  return EDITABLE_TAGS.has(target.tagName ?? '') || target.isContentEditable === true;
}

/**
 * Map a key press to a UI action for the active view.  Every label in both
 * annotation passes is reachable from the keyboard alone.
 */
export function actionForKey(key: string, view: View): KeyAction | null {
  switch (key) {
    case 'j':
    case 'ArrowDown':
      return { type: 'move', delta: 1 };
    case 'k':
    case 'ArrowUp':
      return { type: 'move', delta: -1 };
    case 'Enter':
      return { type: 'submit-focused' };
    case 't':
      return { type: 'switch-view', view: view === 'topics' ? 'tweets' : 'topics' };
    case ']':
      return view === 'tweets' ? { type: 'next-page' } : null;
    case '[':
      return view === 'tweets' ? { type: 'prev-page' } : null;
    default:
      break;
  }
  if (view === 'topics') {
    const label = TOPIC_KEYS[key.toLowerCase()];
    return label ? { type: 'topic-label', label } : null;
  }
  const label = TWEET_KEYS[key.toLowerCase()];
  return label ? { type: 'tweet-label', label } : null;
}
