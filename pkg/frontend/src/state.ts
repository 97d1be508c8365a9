/** Chat view model: all behaviour, no DOM.
 *
 * Every agent bubble renders exactly the fields the service returned; the
 * view model never derives or fabricates citations, badges, or memory rows.
 * One message may be in flight per session (the composer is disabled while
 * waiting), mirroring the server's per-session turn serialization.
 */

import { ApiClient, ApiError } from "./api.js";
import type { AgentMessage, ChatState, MessageResponse, TranscriptTurn } from "./types.js";
import { initialState } from "./types.js";

export interface SessionStorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const STORAGE_KEY = "wellspring.session";

function agentMessageFromResponse(response: MessageResponse): AgentMessage {
  return {
    kind: "agent",
    turn_index: response.turn_index,
    text: response.text,
    evidence: response.evidence,
    memory_used: response.memory_used,
    verdict: response.verdict,
    fallback_used: response.fallback_used,
    web_triggered: response.web_triggered,
    warnings: response.warnings,
  };
}

function agentMessageFromTurn(turn: TranscriptTurn): AgentMessage {
  return {
    kind: "agent",
    turn_index: turn.turn_index,
    text: turn.response,
    evidence: turn.evidence ?? [],
    memory_used: turn.memory_used ?? { short_term: [], long_term: [] },
    verdict: turn.verdict ?? "SAFE",
    fallback_used: turn.fallback_used ?? false,
    web_triggered: turn.web_triggered ?? false,
    warnings: turn.warnings ?? [],
  };
}

export class ChatViewModel {
  state: ChatState = initialState();

  constructor(
    private readonly api: ApiClient,
    private readonly storage: SessionStorageLike,
    private readonly onChange: (state: ChatState) => void = () => {},
  ) {}

  private commit(patch: Partial<ChatState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  /** Create a session, or resume the one stored client-side. A stored id
   * the service no longer knows falls back to a fresh session; a transport
   * failure surfaces the retryable "service down" banner. */
  async start(): Promise<void> {
    this.commit({ ...initialState(), connection: "connecting" });
    const stored = this.storage.getItem(STORAGE_KEY);
    try {
      if (stored) {
        try {
          const transcript = await this.api.getTranscript(stored);
          const messages = transcript.turns.flatMap((turn) => [
            { kind: "user" as const, text: turn.query },
            agentMessageFromTurn(turn),
          ]);
          this.commit({ sessionId: stored, connection: "ready", messages });
          return;
        } catch (error) {
          if (!(error instanceof ApiError)) throw error;
          this.storage.removeItem(STORAGE_KEY); // stale id: start over
        }
      }
      const created = await this.api.createSession();
      this.storage.setItem(STORAGE_KEY, created.session_id);
      this.commit({ sessionId: created.session_id, connection: "ready", messages: [] });
    } catch {
      this.commit({ connection: "down" });
    }
  }

  get canSend(): boolean {
    return this.state.connection === "ready" && this.state.sessionId !== null && !this.state.inFlight;
  }

  setInput(text: string): void {
    this.commit({ inputText: text });
  }

  async send(): Promise<void> {
    const text = this.state.inputText.trim();
    if (!text || !this.canSend || this.state.sessionId === null) return;
    const optimistic = [...this.state.messages, { kind: "user" as const, text }];
    this.commit({ messages: optimistic, inputText: "", inFlight: true, inlineError: null });
    try {
      const response = await this.api.postMessage(this.state.sessionId, text);
      this.commit({
        messages: [...this.state.messages, agentMessageFromResponse(response)],
        inFlight: false,
      });
    } catch (error) {
      if (error instanceof ApiError) {
        // Rejected turn: drop the optimistic bubble, give the text back.
        this.commit({
          messages: this.state.messages.slice(0, -1),
          inputText: text,
          inFlight: false,
          inlineError: error.message,
        });
      } else {
        this.commit({
          messages: this.state.messages.slice(0, -1),
          inputText: text,
          inFlight: false,
          connection: "down",
        });
      }
    }
  }

  /** Open/close the memory inspector for an agent turn (defaults to the
   * latest one). No agent turns yet means nothing to toggle. */
  toggleMemoryPanel(turnIndex?: number): void {
    const agentTurns = this.state.messages.filter((m): m is AgentMessage => m.kind === "agent");
    if (agentTurns.length === 0) return;
    const target = turnIndex ?? agentTurns[agentTurns.length - 1].turn_index;
    if (this.state.memoryPanelOpen && this.state.memoryPanelTurn === target) {
      this.commit({ memoryPanelOpen: false, memoryPanelTurn: null });
    } else {
      this.commit({ memoryPanelOpen: true, memoryPanelTurn: target });
    }
  }

  selectedAgentMessage(): AgentMessage | null {
    if (this.state.memoryPanelTurn === null) return null;
    for (const message of this.state.messages) {
      if (message.kind === "agent" && message.turn_index === this.state.memoryPanelTurn) {
        return message;
      }
    }
    return null;
  }
}
