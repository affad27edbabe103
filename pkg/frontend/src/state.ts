import type { TopicLabel } from './types.js';

export type View = 'topics' | 'tweets';

export interface SessionState {
  annotatorId: string;
  view: View;
  /** index of the focused card/row in the current view */
  focus: number;
  /** local label choices not yet queued (latest choice wins) */
  topicChoices: Record<number, TopicLabel>;
  /** per-item submission state, keyed by `${kind}:${id}` */
  submitted: Record<string, 'pending' | 'acked'>;
  tweetPageOffset: number;
}

export function initialState(): SessionState {
  return {
    annotatorId: '',
    view: 'topics',
    focus: 0,
    topicChoices: {},
    submitted: {},
    tweetPageOffset: 0,
  };
}

export type Action =
  | { type: 'set-annotator'; annotatorId: string }
  | { type: 'switch-view'; view: View }
  | { type: 'move-focus'; delta: number; itemCount: number }
  | { type: 'choose-topic-label'; topicId: number; label: TopicLabel }
  | { type: 'mark-pending'; kind: 'topic' | 'tweet'; itemId: string }
  | { type: 'mark-acked'; kind: 'topic' | 'tweet'; itemId: string }
  | { type: 'set-tweet-page'; offset: number };

export function reduce(state: SessionState, action: Action): SessionState {
  switch (action.type) {
    case 'set-annotator':
      return { ...state, annotatorId: action.annotatorId.trim() };
    case 'switch-view':
      return { ...state, view: action.view, focus: 0 };
    case 'move-focus': {
      if (action.itemCount <= 0) return { ...state, focus: 0 };
      const focus = Math.min(Math.max(state.focus + action.delta, 0), action.itemCount - 1);
      return { ...state, focus };
    }
    case 'choose-topic-label':
      // latest choice wins until the submit action queues it
      return {
        ...state,
        topicChoices: { ...state.topicChoices, [action.topicId]: action.label },
      };
    case 'mark-pending':
      return {
        ...state,
        submitted: { ...state.submitted, [`${action.kind}:${action.itemId}`]: 'pending' },
      };
    case 'mark-acked':
      return {
        ...state,
        submitted: { ...state.submitted, [`${action.kind}:${action.itemId}`]: 'acked' },
      };
    case 'set-tweet-page':
      return { ...state, tweetPageOffset: Math.max(0, action.offset) };
  }
}

export function canSubmitTopic(state: SessionState, topicId: number): boolean {
  return state.annotatorId !== '' && state.topicChoices[topicId] !== undefined;
}

export function submissionState(
  state: SessionState,
  kind: 'topic' | 'tweet',
  itemId: string,
): 'pending' | 'acked' | undefined {
  return state.submitted[`${kind}:${itemId}`];
}
