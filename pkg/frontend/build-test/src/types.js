/** Wire types of the chat service API (schema_version 1). */
export function initialState() {
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
