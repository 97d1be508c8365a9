/** Pure HTML-string renderers.
 *
 * The browser layer assigns these into containers; the snapshot tests
 * compare them against golden files. Badges and chips are driven solely by
 * response flags, and the safety-fallback badge is text, never colour
 * alone.
 */

import type { AgentMessage, ChatState } from "./types.js";

export function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderBanner(state: ChatState): string {
  if (state.connection === "down") {
    return (
      '<div class="banner banner-error" role="alert">Cannot reach the service. ' +
      '<button type="button" data-action="retry">Retry</button></div>'
    );
  }
  if (state.connection === "connecting") {
    return '<div class="banner" role="status">Connecting…</div>';
  }
  return "";
}

function renderBadges(message: AgentMessage): string {
  const badges: string[] = [];
  if (message.fallback_used) {
    badges.push('<span class="badge badge-safety" role="status">safety fallback</span>');
  }
  if (message.web_triggered) {
    badges.push('<span class="badge badge-web">web search used</span>');
  }
  return badges.length ? `<span class="badges">${badges.join("")}</span>` : "";
}

function renderEvidence(message: AgentMessage): string {
  if (message.evidence.length === 0) return "";
  const chips = message.evidence
    .map((ref) => {
      const label = `${escapeHtml(ref.category)} · ${escapeHtml(ref.chunk_id)}`;
      return (
        `<li><a class="chip chip-${escapeHtml(ref.category)}" href="${escapeHtml(ref.uri)}"` +
        ` target="_blank" rel="noopener noreferrer">${label}</a></li>`
      );
    })
    .join("");
  return `<ul class="evidence" aria-label="evidence sources">${chips}</ul>`;
}

function renderWarnings(message: AgentMessage): string {
  if (message.warnings.length === 0) return "";
  const items = message.warnings.map((w) => `<li>${escapeHtml(w)}</li>`).join("");
  return `<details class="warnings"><summary>details</summary><ul>${items}</ul></details>`;
}

export function renderMessages(state: ChatState): string {
  const parts = state.messages.map((message) => {
    if (message.kind === "user") {
      return `<li class="msg msg-user"><p>${escapeHtml(message.text)}</p></li>`;
    }
    return (
      `<li class="msg msg-agent" data-turn="${message.turn_index}">` +
      `<p>${escapeHtml(message.text)}</p>` +
      renderBadges(message) +
      renderEvidence(message) +
      renderWarnings(message) +
      `<button type="button" class="memory-toggle" data-action="memory" data-turn="${message.turn_index}"` +
      ` aria-expanded="${state.memoryPanelOpen && state.memoryPanelTurn === message.turn_index}">` +
      "memory</button>" +
      "</li>"
    );
  });
  if (state.inFlight) {
    parts.push('<li class="msg msg-agent msg-pending" aria-live="polite"><p>…</p></li>');
  }
  return `<ol class="messages">${parts.join("")}</ol>`;
}

export function renderMemoryPanel(state: ChatState, selected: AgentMessage | null): string {
  if (!state.memoryPanelOpen || selected === null) return "";
  const used = selected.memory_used;
  const rows: string[] = [];
  for (const turn of used.short_term) {
    rows.push(`<li class="memory-row memory-short">turn ${turn} — short-term</li>`);
  }
  for (const turn of used.long_term) {
    rows.push(`<li class="memory-row memory-long">turn ${turn} — long-term (recalled)</li>`);
  }
  const body =
    rows.length === 0
      ? '<p class="memory-empty">No memory used for this reply.</p>'
      : `<ul class="memory-rows">${rows.join("")}</ul>`;
  return (
    `<aside class="memory-panel" aria-label="memory used for turn ${selected.turn_index}">` +
    `<h2>Memory for turn ${selected.turn_index}</h2>${body}</aside>`
  );
}

export function renderInlineError(state: ChatState): string {
  if (!state.inlineError) return "";
  return `<p class="inline-error" role="alert">${escapeHtml(state.inlineError)}</p>`;
}

/** Whole chat surface (banner + transcript + error + panel); the unit the
 * golden snapshots pin down. */
export function renderChat(state: ChatState, selected: AgentMessage | null): string {
  return [renderBanner(state), renderMessages(state), renderInlineError(state), renderMemoryPanel(state, selected)]
    .filter((part) => part !== "")
    .join("\n");
}
