/** Bootstrap: wire the console to the service and load a mail.
 *
 * The demo flow takes the next mail from a paste box; production setups
 * would hand mails over from the queueing system instead.
 */

import { AssistClient } from "./api.js";
import { ConsoleApp } from "./ui.js";
import type { Mail } from "./types.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "";

const client = new AssistClient(baseUrl);
const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const app = new ConsoleApp(client, root, (recordId) => {
  console.info("stored record", recordId);
});

const form = document.getElementById("load-form") as HTMLFormElement | null;
const senderInput = document.getElementById("mail-sender") as HTMLInputElement | null;
const textInput = document.getElementById("mail-input") as HTMLTextAreaElement | null;

form?.addEventListener("submit", (event) => {
  event.preventDefault();
  const mail: Mail = {
    sender: senderInput?.value || "kunde@example.org",
    received_at: new Date().toISOString(),
    text: textInput?.value ?? "",
  };
  if (mail.text.trim().length === 0) return;
  void app.loadMail(mail);
});

export { app, client };
