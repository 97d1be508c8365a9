/** Wire types of the chat service API (schema_version 1). */

export interface EvidenceRef {
  chunk_id: string;
  uri: string;
  category: string;
}

export interface MemoryUsed {
  short_term: number[];
  long_term: number[];
}

export interface SessionCreated {
  schema_version: number;
  session_id: string;
  created_at: string;
}

export interface MessageResponse {
  schema_version: number;
  session_id: string;
  turn_index: number;
  text: string;
  evidence: EvidenceRef[];
  memory_used: MemoryUsed;
  verdict: string;
  fallback_used: boolean;
  web_triggered: boolean;
  warnings: string[];
}

export interface TranscriptTurn {
  turn_index: number;
  query: string;
  response: string;
  timestamp: string;
  evidence?: EvidenceRef[];
  memory_used?: MemoryUsed;
  verdict?: string;
  fallback_used?: boolean;
  web_triggered?: boolean;
  warnings?: string[];
}

export interface Transcript {
  schema_version: number;
  session_id: string;
  created_at: string;
  turns: TranscriptTurn[];
}

export interface ApiErrorBody {
  schema_version: number;
  error: { code: string; message: string };
}

/** Chat view model state. */

export interface UserMessage {
  kind: "user";
  text: string;
}

export interface AgentMessage {
  kind: "agent";
  turn_index: number;
  text: string;
  evidence: EvidenceRef[];
  memory_used: MemoryUsed;
  verdict: string;
  fallback_used: boolean;
  web_triggered: boolean;
  warnings: string[];
}

export type ChatMessage = UserMessage | AgentMessage;

export type Connection = "connecting" | "ready" | "down";

export interface ChatState {
  sessionId: string | null;
  connection: Connection;
  messages: ChatMessage[];
  inputText: string;
  inFlight: boolean;
  inlineError: string | null;
  memoryPanelOpen: boolean;
  /** turn_index of the agent message the memory panel describes. */
  memoryPanelTurn: number | null;
}

export function initialState(): ChatState {
  return {
    sessionId: null,
    connection: "connecting",
    messages: [],
    inputText: "",
    inFlight: false,
    inlineError: null,
    memoryPanelOpen: false,
    memoryPanelTurn: null,
  };
}
