import { ApiClient } from "./client.js";
import { ExamConsole } from "./app.js";

// Served by the API process itself, so same-origin is always right.
const client = new ApiClient(window.location.origin);

const root = document.getElementById("app");
const form = document.getElementById("session-form");
const input = document.getElementById("session-id");

if (root instanceof HTMLElement) {
  const console_ = new ExamConsole(client, root);

  const open = (sessionId: string) => {
    window.location.hash = sessionId;
    void console_.load(sessionId);
  };

  if (form instanceof HTMLFormElement && input instanceof HTMLInputElement) {
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const sessionId = input.value.trim();
      if (sessionId) {
        open(sessionId);
      }
    });
  }

  // #<session-id> deep links straight into a session
  const fromHash = window.location.hash.replace(/^#/, "");
  if (fromHash) {
    if (input instanceof HTMLInputElement) {
      input.value = fromHash;
    }
    void console_.load(fromHash);
  }
}
