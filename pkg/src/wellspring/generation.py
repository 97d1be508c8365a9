"""Prompt assembly, LLM providers, and the fail-closed safety gate.

The pipeline per turn: retrieve evidence, build the fused memory state,
assemble a budgeted prompt (persona, memory, evidence, query, in that fixed
order), generate, classify the draft with a separate safety model, and only
deliver drafts classified SAFE. An UNSAFE draft triggers exactly one
regeneration with an added safety instruction; a second UNSAFE delivers the
canned supportive fallback instead. Anything ambiguous anywhere in the
safety path (unparseable classifier output, classifier outage) counts as
UNSAFE: in this domain a lost reply is cheaper than an unsafe one.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

from .errors import ConfigError, ContractViolation, ProviderError
from .index import KnowledgeBase
from .memory import ConversationTurn, MemoryState, SessionMemory
from .retrieval import FusionConfig, RetrievalBundle, retrieve
from .runtime import SystemClock

SAFETY_CLASSIFIER_SYSTEM_PROMPT = (
    "You are a safety classifier. Evaluate the following response for: "
    "(1) encouragement or discussion of self-harm, suicide, or violence; "
    "(2) discriminatory, hateful, or toxic language; "
    "(3) inappropriate or unethical advice. "
    "Respond with 'SAFE' or 'UNSAFE' followed by a brief reason."
)

SAFETY_RETRY_INSTRUCTION = (
    "IMPORTANT: your previous draft was rejected by the safety filter. "
    "Rewrite your answer so it is supportive and safe: no encouragement or "
    "discussion of self-harm, suicide, or violence; no discriminatory, "
    "hateful, or toxic language; no inappropriate or unethical advice."
)

GENERATION_ERROR_TEXT = (
    "I'm sorry, something went wrong on my side and I couldn't put together "
    "a reply just now. Please try sending your message again in a moment."
)

_FIRST_WORD_RE = re.compile(r"[^\W\d_]+")


def load_persona() -> str:
    return resources.files("wellspring.assets").joinpath("persona.txt").read_text(encoding="utf-8")


def load_fallback_text() -> str:
    return resources.files("wellspring.assets").joinpath("fallback.txt").read_text(encoding="utf-8")


# --- safety verdicts ----------------------------------------------------------


@dataclass(frozen=True)
class SafetyVerdict:
    label: str  # "SAFE" | "UNSAFE"
    reason: str = ""


def parse_verdict(raw: str) -> SafetyVerdict:
    """Total, fail-closed parse of classifier output.

    The first alphabetic token decides: "safe" (any case) is SAFE, "unsafe"
    is UNSAFE with the trailing text as reason, and anything else, including
    output with no alphabetic token at all, is UNSAFE with an
    "unparseable" reason. No raw string can reach SAFE any other way.
    """
    match = _FIRST_WORD_RE.search(raw)
    if match is None:
        return SafetyVerdict("UNSAFE", "unparseable classifier output")
    token = match.group(0).lower()
    if token == "safe":
        return SafetyVerdict("SAFE", "")
    if token == "unsafe":
        reason = re.sub(r"^[^\w]+", "", raw[match.end() :]).strip()
        return SafetyVerdict("UNSAFE", reason)
    return SafetyVerdict("UNSAFE", "unparseable classifier output")


def classify_safety(response_text: str, safety_llm) -> str:
    """Send the classifier system prompt plus the candidate response; return
    the raw classifier output. Provider failures propagate to the caller,
    which must treat them as UNSAFE."""
    return safety_llm.complete(response_text, system=SAFETY_CLASSIFIER_SYSTEM_PROMPT)


# --- LLM providers ------------------------------------------------------------


@dataclass(frozen=True)
class LlmProviderConfig:
    provider_kind: str = "scripted-stub"  # "scripted-stub" | "remote-api"
    model: Optional[str] = None
    endpoint: Optional[str] = None
    api_key_env: Optional[str] = None
    temperature: float = 0.2
    max_output_tokens: int = 512
    script_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.provider_kind not in ("scripted-stub", "remote-api"):
            raise ConfigError(
                f"llm provider must be 'scripted-stub' or 'remote-api', got {self.provider_kind!r}"
            )
        if self.provider_kind == "remote-api" and not self.endpoint:
            raise ConfigError("llm endpoint is required for the remote-api provider")


@dataclass
class ScriptEntry:
    pattern: str  # regex searched in system+prompt; "" matches everything
    output: str
    once: bool = False


class ScriptedLlmProvider:
    """Deterministic canned LLM.

    Entries are tried in order against the concatenated system prompt and
    user prompt; the first match wins. ``once`` entries are consumed on use,
    which lets a fixture script a different answer for a retry of the same
    prompt. No matching entry is a provider error, so fixtures must be
    explicit about every call they expect.
    """

    kind = "scripted-stub"

    def __init__(self, entries: Sequence[ScriptEntry]):
        self.entries = list(entries)
        self.calls = 0
        self.prompts: list[str] = []
        self._used: set[int] = set()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedLlmProvider":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"llm script {path} unreadable: {exc}") from exc
        entries = [
            ScriptEntry(pattern=e.get("pattern", ""), output=e["output"], once=bool(e.get("once", False)))
            for e in raw
        ]
        return cls(entries)

    def complete(self, prompt: str, system: Optional[str] = None) -> str:
        self.calls += 1
        text = f"{system}\n\n{prompt}" if system else prompt
        self.prompts.append(text)
        for idx, entry in enumerate(self.entries):
            if entry.once and idx in self._used:
                continue
            if entry.pattern == "" or re.search(entry.pattern, text, re.DOTALL):
                if entry.once:
                    self._used.add(idx)
                return entry.output
        raise ProviderError("scripted llm has no entry matching this prompt", retryable=False)


class RemoteLlmProvider:
    """HTTP completion provider: POST {model, system, prompt, temperature,
    max_output_tokens} and read {"text": ...}."""

    kind = "remote-api"

    def __init__(self, config: LlmProviderConfig):
        if config.provider_kind != "remote-api":
            raise ConfigError("RemoteLlmProvider requires provider_kind='remote-api'")
        self.config = config

    def complete(self, prompt: str, system: Optional[str] = None) -> str:
        import httpx

        headers = {}
        if self.config.api_key_env:
            import os

            key = os.environ.get(self.config.api_key_env)
            if not key:
                raise ProviderError(f"llm API key env var {self.config.api_key_env} is unset", retryable=False)
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = httpx.post(
                self.config.endpoint,
                json={
                    "model": self.config.model,
                    "system": system,
                    "prompt": prompt,
                    "temperature": self.config.temperature,
                    "max_output_tokens": self.config.max_output_tokens,
                },
                headers=headers,
                timeout=60.0,
            )
            response.raise_for_status()
            return str(response.json()["text"])
        except ProviderError:
            raise
        except Exception as exc:  # noqa: BLE001
            raise ProviderError(f"llm call failed: {exc}", retryable=True) from exc


def make_llm_provider(config: LlmProviderConfig, base_dir: Optional[Path] = None):
    if config.provider_kind == "scripted-stub":
        if not config.script_path:
            raise ConfigError("scripted-stub llm needs a script_path")
        path = Path(config.script_path)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return ScriptedLlmProvider.from_file(path)
    return RemoteLlmProvider(config)


# --- prompt assembly ----------------------------------------------------------


@dataclass(frozen=True)
class EvidenceItem:
    chunk_id: str
    category: str
    title: str
    uri: str
    text: str


@dataclass
class PromptBundle:
    persona: str
    memory_items: list[tuple[ConversationTurn, str]]
    evidence_items: list[EvidenceItem]
    query: str
    token_budget: int
    rendered: str = ""


def _render(persona: str, memory_items, evidence_items, query: str) -> str:
    parts = [persona.strip()]
    if memory_items:
        lines = ["## Conversation memory"]
        for turn, tier in memory_items:
            label = "recent" if tier == "short_term" else "recalled"
            lines.append(f"[turn {turn.turn_index} | {label}]")
            lines.append(f"User: {turn.query}")
            lines.append(f"Assistant: {turn.response}")
        parts.append("\n".join(lines))
    if evidence_items:
        lines = ["## Evidence"]
        for i, item in enumerate(evidence_items, start=1):
            source = item.title or item.uri or item.chunk_id
            lines.append(f"[{i}] {item.chunk_id} ({item.category}) {source}")
            lines.append(item.text)
        parts.append("\n".join(lines))
    parts.append("## User message\n" + query)
    return "\n\n".join(parts)


def _token_count(text: str) -> int:
    return len(text.split())


def assemble_prompt(
    query: str,
    memory: MemoryState,
    bundle: RetrievalBundle,
    kb: KnowledgeBase,
    token_budget: int,
    persona: str,
) -> PromptBundle:
    """Render the prompt blocks in fixed order within the token budget.

    When over budget, evict lowest-fused-rank evidence first, then the
    oldest recalled long-term entries, then the oldest short-term turns.
    Persona and query are never dropped; a budget too small for those two
    alone is a caller error.
    """
    if _token_count(_render(persona, [], [], query)) > token_budget:
        raise ContractViolation(f"token_budget={token_budget} cannot fit persona and query")

    evidence_items: list[EvidenceItem] = []
    for hit in bundle.fused:
        if hit.chunk_id in bundle.web_chunks:
            chunk = bundle.web_chunks[hit.chunk_id]
            meta = bundle.web_meta[hit.chunk_id]
            evidence_items.append(EvidenceItem(hit.chunk_id, "web", meta.title, meta.uri, chunk.text))
        else:
            chunk = kb.chunks[hit.chunk_id]
            doc = kb.doc_for_chunk(hit.chunk_id)
            evidence_items.append(EvidenceItem(hit.chunk_id, doc.category, doc.title, doc.uri, chunk.text))

    memory_items = list(memory.fused)
    rendered = _render(persona, memory_items, evidence_items, query)
    while _token_count(rendered) > token_budget:
        if evidence_items:
            evidence_items.pop()  # fused order: last item is the lowest-ranked
        else:
            long_indices = [i for i, (_, tier) in enumerate(memory_items) if tier == "long_term"]
            if long_indices:
                oldest = min(long_indices, key=lambda i: memory_items[i][0].turn_index)
                memory_items.pop(oldest)
            elif memory_items:
                memory_items.pop(0)  # short-term items are chronological; drop the oldest
            else:
                break  # persona+query alone fit by the precondition check
        rendered = _render(persona, memory_items, evidence_items, query)

    return PromptBundle(
        persona=persona,
        memory_items=memory_items,
        evidence_items=evidence_items,
        query=query,
        token_budget=token_budget,
        rendered=rendered,
    )


# --- the response pipeline ----------------------------------------------------


@dataclass(frozen=True)
class Evidence:
    chunk_id: str
    uri: str
    category: str


@dataclass
class AgentResponse:
    text: str
    evidence: list[Evidence]
    memory_used: dict[str, list[int]]
    verdict: SafetyVerdict
    fallback_used: bool
    web_triggered: bool
    warnings: list[str] = field(default_factory=list)
    turn_index: Optional[int] = None  # None when the turn was not recorded


class ChatEngine:
    """Everything needed to answer one message, wired together.

    ``respond`` is the conversational path (memory + safety gate + turn
    recording); ``answer_once`` is the stateless path used by the generation
    evaluation harness.
    """

    def __init__(
        self,
        kb: KnowledgeBase,
        embed_provider,
        web_client,
        generation_llm,
        safety_llm,
        fusion: Optional[FusionConfig] = None,
        persona: Optional[str] = None,
        fallback_text: Optional[str] = None,
        token_budget: int = 2048,
        recall_k: int = 3,
        clock: Optional[Callable[[], str]] = None,
        quarantine_path: Optional[Path] = None,
    ):
        self.kb = kb
        self.embed_provider = embed_provider
        self.web_client = web_client
        self.generation_llm = generation_llm
        self.safety_llm = safety_llm
        self.fusion = fusion or FusionConfig()
        self.persona = persona if persona is not None else load_persona()
        self.fallback_text = fallback_text if fallback_text is not None else load_fallback_text()
        self.token_budget = token_budget
        self.recall_k = recall_k
        self.clock = clock or SystemClock()
        self.quarantine_path = quarantine_path

    def respond(self, session: SessionMemory, query: str) -> AgentResponse:
        bundle = retrieve(query, self.fusion, self.kb, self.embed_provider, self.web_client)
        memory = session.build_memory(query, k=self.recall_k)
        prompt = assemble_prompt(query, memory, bundle, self.kb, self.token_budget, self.persona)
        warnings = list(bundle.warnings) + list(memory.warnings)
        memory_used = memory.used_indices()

        delivered: Optional[str] = None
        verdict = SafetyVerdict("UNSAFE", "no generation attempted")
        for attempt in (1, 2):
            gen_prompt = prompt.rendered if attempt == 1 else prompt.rendered + "\n\n" + SAFETY_RETRY_INSTRUCTION
            try:
                candidate = self.generation_llm.complete(gen_prompt)
            except ProviderError as exc:
                # Hard generation failure: static apology, nothing recorded.
                return AgentResponse(
                    text=GENERATION_ERROR_TEXT,
                    evidence=[],
                    memory_used=memory_used,
                    verdict=SafetyVerdict("UNSAFE", "generation provider unavailable"),
                    fallback_used=True,
                    web_triggered=bundle.web_triggered,
                    warnings=warnings + [f"generation failed: {exc}"],
                    turn_index=None,
                )
            try:
                verdict = parse_verdict(classify_safety(candidate, self.safety_llm))
            except ProviderError:
                verdict = SafetyVerdict("UNSAFE", "classifier unavailable")
            if verdict.label == "SAFE":
                delivered = candidate
                break
            self._quarantine(candidate, verdict)

        fallback_used = delivered is None
        if fallback_used:
            delivered = self.fallback_text

        evidence = [Evidence(item.chunk_id, item.uri, item.category) for item in prompt.evidence_items]
        session.record_turn(
            query,
            delivered,
            meta={
                "evidence": [
                    {"chunk_id": e.chunk_id, "uri": e.uri, "category": e.category} for e in evidence
                ],
                "memory_used": memory_used,
                "verdict": verdict.label,
                "fallback_used": fallback_used,
                "web_triggered": bundle.web_triggered,
                "warnings": warnings,
            },
        )
        return AgentResponse(
            text=delivered,
            evidence=evidence,
            memory_used=memory_used,
            verdict=verdict,
            fallback_used=fallback_used,
            web_triggered=bundle.web_triggered,
            warnings=warnings,
            turn_index=len(session.turns),
        )

    def answer_once(self, query: str, use_retrieval: bool = True) -> str:
        """Single ungated generation for evaluation: retrieval-grounded or
        persona+query only. Provider errors propagate (the harness counts
        them as failed examples)."""
        if use_retrieval:
            bundle = retrieve(query, self.fusion, self.kb, self.embed_provider, self.web_client)
        else:
            bundle = RetrievalBundle(
                query=query, sparse_hits=[], dense_hits=[], web_hits=[], fused=[], web_triggered=False
            )
        empty_memory = MemoryState(short_term=[], long_term=[], fused=[])
        prompt = assemble_prompt(query, empty_memory, bundle, self.kb, self.token_budget, self.persona)
        return self.generation_llm.complete(prompt.rendered)

    def _quarantine(self, text: str, verdict: SafetyVerdict) -> None:
        # Blocked drafts never reach the transcript. They are dropped unless
        # an explicit quarantine file was configured for auditing.
        if self.quarantine_path is None:
            return
        self.quarantine_path.parent.mkdir(parents=True, exist_ok=True)
        record = {"timestamp": self.clock(), "reason": verdict.reason, "text": text}
        with self.quarantine_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
