/** Browser bootstrap: wires the view model to the DOM. */

import { ApiClient } from "./api.js";
import { renderChat } from "./render.js";
import { ChatViewModel } from "./state.js";

function apiBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("api") ?? "";
}

function boot(): void {
  const chatRoot = document.getElementById("chat")!;
  const form = document.getElementById("composer") as HTMLFormElement;
  const input = document.getElementById("composer-input") as HTMLInputElement;
  const sendButton = document.getElementById("composer-send") as HTMLButtonElement;
  const sessionLabel = document.getElementById("session-label")!;

  const api = new ApiClient((url, init) => window.fetch(url, init), apiBase());
  const vm = new ChatViewModel(api, window.localStorage, (state) => {
    chatRoot.innerHTML = renderChat(state, vm.selectedAgentMessage());
    sessionLabel.textContent = state.sessionId ? `session ${state.sessionId}` : "no session";
    const sendable = vm.canSend;
    input.disabled = !sendable;
    sendButton.disabled = !sendable;
    if (document.activeElement !== input) {
      input.value = state.inputText;
    }
    chatRoot.scrollTop = chatRoot.scrollHeight;
  });

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    vm.setInput(input.value);
    void vm.send();
  });
  input.addEventListener("input", () => vm.setInput(input.value));

  // Delegated clicks: per-message memory toggles and the banner retry.
  chatRoot.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.getAttribute("data-action");
    if (action === "memory") {
      vm.toggleMemoryPanel(Number(target.getAttribute("data-turn")));
    } else if (action === "retry") {
      void vm.start();
    }
  });

  void vm.start();
}

document.addEventListener("DOMContentLoaded", boot);
