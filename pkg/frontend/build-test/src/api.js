/** Thin typed client over the service HTTP API with an injectable fetch,
 * so tests can script the transport and the browser passes window.fetch. */
/** A failed API call that carried a machine-readable error envelope. */
export class ApiError extends Error {
    constructor(status, code, message) {
        super(message);
        this.status = status;
        this.code = code;
    }
}
function asApiError(status, body) {
    const envelope = body;
    const code = envelope?.error?.code ?? "unknown_error";
    const message = envelope?.error?.message ?? `request failed with status ${status}`;
    return new ApiError(status, code, message);
}
export class ApiClient {
    constructor(fetchImpl, baseUrl = "") {
        this.fetchImpl = fetchImpl;
        this.baseUrl = baseUrl;
    }
    async request(method, path, body) {
        const response = await this.fetchImpl(this.baseUrl + path, {
            method,
            headers: body === undefined ? undefined : { "content-type": "application/json" },
            body: body === undefined ? undefined : JSON.stringify(body),
        });
        const parsed = await response.json();
        if (response.status >= 400) {
            throw asApiError(response.status, parsed);
        }
        return parsed;
    }
    createSession() {
        return this.request("POST", "/sessions");
    }
    postMessage(sessionId, text) {
        return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/messages`, { text });
    }
    getTranscript(sessionId) {
        return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}/transcript`);
    }
}
