import { ApiClient } from './api.js';
import { actionForKey, isTypingTarget, type KeyAction } from './keyboard.js';
import { PendingQueue } from './queue.js';
import {
  canSubmitTopic,
  initialState,
  reduce,
  submissionState,
  type Action,
  type SessionState,
} from './state.js';
import { TOPIC_LABELS, TWEET_LABELS, type Progress, type SampleTweet, type TopicCard } from './types.js';

const PAGE_SIZE = 25;

const api = new ApiClient();
const queue = new PendingQueue(api, window.localStorage);

let state: SessionState = initialState();
let topics: TopicCard[] = [];
let candidates: SampleTweet[] = [];
let candidateTotal = 0;
let progress: Progress | null = null;
let connectionOk = true;

function dispatch(action: Action): void {
  state = reduce(state, action);
  render();
}

async function refreshTopics(): Promise<void> {
  topics = await api.getTopics();
}

async function refreshCandidates(): Promise<void> {
  const page = await api.getRogueCandidates(state.tweetPageOffset, PAGE_SIZE);
  candidates = page.tweets;
  candidateTotal = page.total;
}

async function refreshProgress(): Promise<void> {
  progress = await api.getProgress();
}

async function refreshAll(): Promise<void> {
  try {
    await Promise.all([refreshTopics(), refreshCandidates(), refreshProgress()]);
    connectionOk = true;
  } catch {
    connectionOk = false;
  }
  render();
}

function queueTopicAnnotation(topicId: number): void {
  const label = state.topicChoices[topicId];
  if (!canSubmitTopic(state, topicId)) return;
  queue.enqueue({ kind: 'topic', itemId: String(topicId), label, annotatorId: state.annotatorId });
  dispatch({ type: 'mark-pending', kind: 'topic', itemId: String(topicId) });
  void flushSoon();
}

function queueTweetAnnotation(tweetId: string, label: string): void {
  if (!state.annotatorId) return;
  queue.enqueue({ kind: 'tweet', itemId: tweetId, label, annotatorId: state.annotatorId });
  dispatch({ type: 'mark-pending', kind: 'tweet', itemId: tweetId });
  void flushSoon();
}

async function flushSoon(): Promise<void> {
  const delivered = await queue.flush();
  connectionOk = queue.pending.length === 0;
  if (delivered > 0) {
    // acked labels now live server-side; re-fetch so the UI shows only
    // round-tripped annotations
    await refreshAll();
  } else {
    render();
  }
}

function handleAction(action: KeyAction): void {
  switch (action.type) {
    case 'move':
      dispatch({
        type: 'move-focus',
        delta: action.delta,
        itemCount: state.view === 'topics' ? topics.length : candidates.length,
      });
      break;
    case 'switch-view':
      dispatch({ type: 'switch-view', view: action.view });
      break;
    case 'topic-label': {
      const card = topics[state.focus];
      if (card) dispatch({ type: 'choose-topic-label', topicId: card.topic_id, label: action.label });
      break;
    }
    case 'tweet-label': {
      const row = candidates[state.focus];
      if (row) queueTweetAnnotation(row.tweet_id, action.label);
      break;
    }
    case 'submit-focused': {
      if (state.view === 'topics') {
        const card = topics[state.focus];
        if (card) queueTopicAnnotation(card.topic_id);
      }
      break;
    }
    case 'next-page':
      dispatch({ type: 'set-tweet-page', offset: state.tweetPageOffset + PAGE_SIZE });
      void refreshCandidates().then(render);
      break;
    case 'prev-page':
      dispatch({ type: 'set-tweet-page', offset: state.tweetPageOffset - PAGE_SIZE });
      void refreshCandidates().then(render);
      break;
  }
}

// --- rendering -------------------------------------------------------------

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderHeader(root: HTMLElement): void {
  const header = el('header');
  const title = el('h1', undefined, 'rxwatch annotation');
  header.appendChild(title);

  const annotator = el('div', 'annotator');
  const label = el('label', undefined, 'annotator id ');
  const input = el('input');
  input.id = 'annotator-input';
  input.value = state.annotatorId;
  input.placeholder = 'required before submitting';
  input.addEventListener('change', () => dispatch({ type: 'set-annotator', annotatorId: input.value }));
  label.appendChild(input);
  annotator.appendChild(label);
  header.appendChild(annotator);

  const tabs = el('nav', 'tabs');
  for (const view of ['topics', 'tweets'] as const) {
    const button = el('button', state.view === view ? 'tab active' : 'tab');
    button.textContent = view === 'topics' ? 'Pass 1: topics' : 'Pass 2: tweets';
    button.addEventListener('click', () => dispatch({ type: 'switch-view', view }));
    tabs.appendChild(button);
  }
  header.appendChild(tabs);

  const status = el('div', 'status');
  if (progress) {
    const t = progress.topics;
    const w = progress.tweets;
    const agreement = progress.agreement.topics;
    const precision = progress.rogue_precision_live;
    status.textContent =
      `topics ${t.annotated}/${t.total} · candidates ${w.annotated}/${w.candidates}` +
      (agreement !== null ? ` · topic agreement ${agreement.toFixed(2)}` : '') +
      (precision !== null ? ` · running precision ${precision.toFixed(2)}` : '');
  }
  const queueNote = el('span', connectionOk ? 'queue ok' : 'queue retrying');
  queueNote.textContent =
    queue.pending.length === 0
      ? ' · all annotations acknowledged'
      : ` · ${queue.pending.length} queued (retrying…)`;
  status.appendChild(queueNote);
  header.appendChild(status);
  root.appendChild(header);
}

function renderTopicCard(card: TopicCard, index: number): HTMLElement {
  const div = el('article', index === state.focus ? 'card focused' : 'card');
  div.appendChild(el('h2', undefined, `topic ${card.topic_id}`));

  const words = el('ul', 'words');
  for (const word of card.top_words) {
    words.appendChild(el('li', undefined, `${word.word} ${word.probability.toFixed(4)}`));
  }
  div.appendChild(words);

  const samples = el('details');
  samples.appendChild(el('summary', undefined, `${card.sample_tweets.length} sample tweets`));
  for (const tweet of card.sample_tweets.slice(0, 5)) {
    samples.appendChild(el('p', 'sample', tweet.text ?? tweet.tweet_id));
  }
  div.appendChild(samples);

  const chosen = state.topicChoices[card.topic_id];
  const buttons = el('div', 'labels');
  TOPIC_LABELS.forEach((topicLabel, i) => {
    const button = el('button', chosen === topicLabel ? 'label chosen' : 'label');
    button.textContent = `${i + 1} ${topicLabel}`;
    button.addEventListener('click', () =>
      dispatch({ type: 'choose-topic-label', topicId: card.topic_id, label: topicLabel }),
    );
    buttons.appendChild(button);
  });
  div.appendChild(buttons);

  const submit = el('button', 'submit');
  submit.textContent = 'submit (Enter)';
  submit.disabled = !canSubmitTopic(state, card.topic_id);
  if (!chosen) submit.title = 'choose a label first';
  submit.addEventListener('click', () => queueTopicAnnotation(card.topic_id));
  div.appendChild(submit);

  const acks = el('div', 'acks');
  for (const annotation of card.annotations) {
    acks.appendChild(el('span', 'ack', `${annotation.annotator_id}: ${annotation.label}`));
  }
  const local = submissionState(state, 'topic', String(card.topic_id));
  if (local === 'pending' && !card.annotations.some((a) => a.annotator_id === state.annotatorId)) {
    acks.appendChild(el('span', 'pending', 'queued…'));
  }
  div.appendChild(acks);
  return div;
}

function renderTweetRow(tweet: SampleTweet, index: number): HTMLElement {
  const row = el('article', index === state.focus ? 'row focused' : 'row');
  row.appendChild(el('p', 'text', tweet.text ?? tweet.tweet_id));

  const badges = el('div', 'badges');
  if (tweet.has_url) badges.appendChild(el('span', 'badge', 'URL'));
  badges.appendChild(el('span', 'badge', `rt ${tweet.retweet_count ?? 0}`));
  badges.appendChild(el('span', 'badge', `fav ${tweet.favorite_count ?? 0}`));
  badges.appendChild(el('span', 'badge', `followers ${tweet.user_followers_count ?? 0}`));
  badges.appendChild(el('span', 'badge', `topic ${tweet.dominant_topic} @ ${(tweet.dominant_share * 100).toFixed(0)}%`));
  row.appendChild(badges);

  const buttons = el('div', 'labels');
  TWEET_LABELS.forEach((tweetLabel, i) => {
    const button = el('button', 'label');
    button.textContent = `${i + 1} ${tweetLabel}`;
    button.addEventListener('click', () => queueTweetAnnotation(tweet.tweet_id, tweetLabel));
    buttons.appendChild(button);
  });
  row.appendChild(buttons);

  const acks = el('div', 'acks');
  for (const annotation of tweet.annotations ?? []) {
    acks.appendChild(el('span', 'ack', `${annotation.annotator_id}: ${annotation.label}`));
  }
  const local = submissionState(state, 'tweet', tweet.tweet_id);
  if (local === 'pending' && !(tweet.annotations ?? []).some((a) => a.annotator_id === state.annotatorId)) {
    acks.appendChild(el('span', 'pending', 'queued…'));
  }
  row.appendChild(acks);
  return row;
}

function render(): void {
  const root = document.getElementById('app');
  if (!root) return;
  const activeId = document.activeElement?.id;
  root.textContent = '';
  renderHeader(root);

  const main = el('main');
  if (state.view === 'topics') {
    if (topics.length === 0) {
      main.appendChild(el('p', 'empty', 'no topics available - is the model fitted?'));
    }
    topics.forEach((card, index) => main.appendChild(renderTopicCard(card, index)));
  } else {
    if (candidates.length === 0) {
      main.appendChild(
        el('p', 'empty', 'no rogue candidates yet - finish the topic pass first'),
      );
    }
    candidates.forEach((tweet, index) => main.appendChild(renderTweetRow(tweet, index)));
    if (candidateTotal > PAGE_SIZE) {
      main.appendChild(
        el(
          'p',
          'pager',
          `showing ${state.tweetPageOffset + 1}-${state.tweetPageOffset + candidates.length} of ${candidateTotal}  ([ / ] to page)`,
        ),
      );
    }
  }
  root.appendChild(main);
  if (activeId) document.getElementById(activeId)?.focus();
}

window.addEventListener('keydown', (event) => {
  if (isTypingTarget(event.target as HTMLElement | null)) return;
  const action = actionForKey(event.key, state.view);
  if (action) {
    event.preventDefault();
    handleAction(action);
  }
});

window.setInterval(() => {
  if (queue.pending.length > 0) void flushSoon();
}, 4000);
window.setInterval(() => void refreshProgress().then(render).catch(() => undefined), 5000);

void refreshAll();
