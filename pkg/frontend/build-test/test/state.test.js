import assert from "node:assert/strict";
import { test } from "node:test";
import { ApiClient } from "../src/api.js";
import { ChatViewModel } from "../src/state.js";
import { FakeStorage, FakeTransport, messageResponse } from "./fakes.js";
function makeVm(transport, storage = new FakeStorage()) {
    return new ChatViewModel(new ApiClient(transport.fetch), storage);
}
const CREATED = { schema_version: 1, session_id: "s0001", created_at: "2026-01-01T00:00:00+00:00" };
test("start creates a session and shows an empty ready chat", async () => {
    const transport = new FakeTransport();
    transport.expect("POST", "/sessions", 201, CREATED);
    const vm = makeVm(transport);
    await vm.start();
    assert.equal(vm.state.sessionId, "s0001");
    assert.equal(vm.state.connection, "ready");
    assert.deepEqual(vm.state.messages, []);
    assert.equal(vm.canSend, true);
});
test("start persists the session id client-side", async () => {
    const transport = new FakeTransport();
    transport.expect("POST", "/sessions", 201, CREATED);
    const storage = new FakeStorage();
    await makeVm(transport, storage).start();
    assert.equal(storage.getItem("wellspring.session"), "s0001");
});
test("service down disables sending and offers retry that recovers", async () => {
    const transport = new FakeTransport();
    transport.failNetwork = true;
    const vm = makeVm(transport);
    await vm.start();
    assert.equal(vm.state.connection, "down");
    assert.equal(vm.canSend, false);
    transport.failNetwork = false;
    transport.expect("POST", "/sessions", 201, CREATED);
    await vm.start();
    assert.equal(vm.state.connection, "ready");
    assert.equal(vm.canSend, true);
});
test("reload with a stored session restores the transcript", async () => {
    const storage = new FakeStorage();
    storage.setItem("wellspring.session", "s0042");
    const transport = new FakeTransport();
    transport.expect("GET", "/sessions/s0042/transcript", 200, {
        schema_version: 1,
        session_id: "s0042",
        created_at: "2026-01-01T00:00:00+00:00",
        turns: [
            {
                turn_index: 1,
                query: "earlier question",
                response: "earlier answer",
                timestamp: "2026-01-01T00:00:01+00:00",
                evidence: [{ chunk_id: "doc#0", uri: "https://x", category: "clinical" }],
                memory_used: { short_term: [], long_term: [] },
                verdict: "SAFE",
                fallback_used: false,
                web_triggered: false,
                warnings: [],
            },
        ],
    });
    const vm = makeVm(transport, storage);
    await vm.start();
    assert.equal(vm.state.sessionId, "s0042");
    assert.equal(vm.state.messages.length, 2);
    assert.deepEqual(vm.state.messages[0], { kind: "user", text: "earlier question" });
    const agent = vm.state.messages[1];
    assert.equal(agent.kind, "agent");
    assert.equal(agent.kind === "agent" && agent.text, "earlier answer");
});
test("stale stored session falls back to a fresh one", async () => {
    const storage = new FakeStorage();
    storage.setItem("wellspring.session", "gone");
    const transport = new FakeTransport();
    transport.expect("GET", "/sessions/gone/transcript", 404, {
        schema_version: 1,
        error: { code: "session_not_found", message: "no session 'gone'" },
    });
    transport.expect("POST", "/sessions", 201, CREATED);
    const vm = makeVm(transport, storage);
    await vm.start();
    assert.equal(vm.state.sessionId, "s0001");
    assert.equal(storage.getItem("wellspring.session"), "s0001");
});
test("send maps every response field onto the agent bubble unchanged", async () => {
    const transport = new FakeTransport();
    transport.expect("POST", "/sessions", 201, CREATED);
    const response = messageResponse({
        turn_index: 1,
        text: "grounded reply",
        evidence: [
            { chunk_id: "clin-sleep#0", uri: "https://health.example.gov/sleep", category: "clinical" },
            { chunk_id: "web#abc", uri: "https://maps.example.com", category: "web" },
        ],
        memory_used: { short_term: [], long_term: [] },
        web_triggered: true,
        warnings: ["web arm warning"],
    });
    transport.expect("POST", "/sessions/s0001/messages", 200, response);
    const vm = makeVm(transport);
    await vm.start();
    vm.setInput("how do I sleep better?");
    await vm.send();
    assert.equal(vm.state.messages.length, 2);
    const agent = vm.state.messages[1];
    assert.equal(agent.kind, "agent");
    if (agent.kind === "agent") {
        assert.deepEqual(agent.evidence, response.evidence); // never fabricated
        assert.deepEqual(agent.memory_used, response.memory_used);
        assert.equal(agent.web_triggered, true);
        assert.deepEqual(agent.warnings, ["web arm warning"]);
    }
    assert.equal(vm.state.inputText, "");
    assert.equal(vm.state.inFlight, false);
    const posted = transport.calls.find((c) => c.path.endsWith("/messages"));
    assert.deepEqual(JSON.parse(posted.body), { text: "how do I sleep better?" });
});
test("validation error shows inline and preserves the input", async () => {
    const transport = new FakeTransport();
    transport.expect("POST", "/sessions", 201, CREATED);
    transport.expect("POST", "/sessions/s0001/messages", 400, {
        schema_version: 1,
        error: { code: "validation_error", message: "text must be a non-empty string" },
    });
    const vm = makeVm(transport);
    await vm.start();
    vm.setInput("doomed message");
    await vm.send();
    assert.equal(vm.state.messages.length, 0); // optimistic bubble rolled back
    assert.equal(vm.state.inputText, "doomed message");
    assert.equal(vm.state.inlineError, "text must be a non-empty string");
    assert.equal(vm.canSend, true);
});
test("one in-flight message per session: canSend is false while waiting", async () => {
    const transport = new FakeTransport();
    transport.expect("POST", "/sessions", 201, CREATED);
    transport.expect("POST", "/sessions/s0001/messages", 200, messageResponse({}));
    const vm = makeVm(transport);
    await vm.start();
    vm.setInput("first");
    const pending = vm.send();
    assert.equal(vm.state.inFlight, true);
    assert.equal(vm.canSend, false);
    await pending;
    assert.equal(vm.canSend, true);
});
test("memory panel toggles per turn and reflects memory_used verbatim", async () => {
    const transport = new FakeTransport();
    transport.expect("POST", "/sessions", 201, CREATED);
    transport.expect("POST", "/sessions/s0001/messages", 200, messageResponse({ turn_index: 1, memory_used: { short_term: [1, 2], long_term: [7] } }));
    const vm = makeVm(transport);
    await vm.start();
    vm.toggleMemoryPanel(); // no agent turns yet: no-op
    assert.equal(vm.state.memoryPanelOpen, false);
    vm.setInput("q");
    await vm.send();
    vm.toggleMemoryPanel();
    assert.equal(vm.state.memoryPanelOpen, true);
    assert.equal(vm.state.memoryPanelTurn, 1);
    assert.deepEqual(vm.selectedAgentMessage()?.memory_used, { short_term: [1, 2], long_term: [7] });
    vm.toggleMemoryPanel(1); // same turn: closes
    assert.equal(vm.state.memoryPanelOpen, false);
});
