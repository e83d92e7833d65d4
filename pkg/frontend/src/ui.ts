/** DOM rendering and event wiring. All state transitions go through the
 * pure functions in compose.ts; this layer only draws and dispatches. */

import { ApiError, AssistClient } from "./api.js";
import {
  activateSpan,
  activeProposals,
  canSubmit,
  type ComposeState,
  draftText,
  editDraftBody,
  initCompose,
  initDegraded,
  markSpan,
  quoteOriginal,
  selectManual,
  selectProposal,
  submitPayload,
} from "./compose.js";
import { groupByPrefix, leafName } from "./categoryTree.js";
import type { CategoriesResponse, HistoryResponse, Mail } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ConsoleApp {
  private state: ComposeState | null = null;
  private categories: CategoriesResponse | null = null;
  private history: HistoryResponse | null = null;
  private banner: string | null = null;

  constructor(
    private readonly client: AssistClient,
    private readonly root: HTMLElement,
    private readonly onSubmitted: (recordId: string) => void = () => {},
  ) {}

  async loadMail(mail: Mail): Promise<void> {
    this.banner = null;
    try {
      const response = await this.client.classify(mail.text);
      this.state = initCompose(mail, response.proposals);
    } catch (error) {
      if (error instanceof ApiError && error.modelMissing) {
        this.state = initDegraded(mail);
        this.banner = "Kein Modell aktiv - Antworten bitte manuell aus der Liste wählen.";
      } else {
        throw error;
      }
    }
    try {
      this.categories = await this.client.categories();
    } catch {
      this.categories = null;
    }
    try {
      this.history = await this.client.history(mail.sender);
    } catch {
      this.history = null;
    }
    this.render();
  }

  /** Classify only the marked span and swap the tab set. */
  async reclassifySpan(start: number, end: number): Promise<void> {
    if (!this.state) return;
    const response = await this.client.classify(this.state.mail.text, [start, end]);
    this.state = markSpan(this.state, start, end, response.proposals);
    this.render();
  }

  async submit(): Promise<string | null> {
    if (!this.state || !canSubmit(this.state)) return null;
    const result = await this.client.submitAnswer(submitPayload(this.state));
    this.onSubmitted(result.record_id);
    this.banner = `Antwort gespeichert (${result.record_id}).`;
    this.render();
    return result.record_id;
  }

  // -- rendering ------------------------------------------------------------

  render(): void {
    const state = this.state;
    this.root.replaceChildren();
    if (!state) return;

    if (this.banner) {
      this.root.append(el("div", "banner", this.banner));
    }

    const layout = el("div", "layout");
    layout.append(this.renderCategoryPanel(state));
    const main = el("div", "main");
    main.append(this.renderMailPane(state));
    main.append(this.renderTabs(state));
    main.append(this.renderComposer(state));
    layout.append(main);
    layout.append(this.renderHistoryPanel());
    this.root.append(layout);
  }

  private renderMailPane(state: ComposeState): HTMLElement {
    const pane = el("section", "mail-pane");
    pane.append(el("h2", undefined, `Von: ${state.mail.sender}`));
    const body = el("pre", "mail-text", state.mail.text);
    body.id = "mail-text";
    pane.append(body);
    const hint = el(
      "div",
      "hint",
      "Frage markieren und klassifizieren, wenn die Mail mehrere Anliegen enthält.",
    );
    const button = el("button", "mark-span", "Markierung klassifizieren");
    button.addEventListener("click", () => {
      const selection = window.getSelection();
      if (!selection || selection.rangeCount === 0) return;
      const range = selection.getRangeAt(0);
      if (!body.contains(range.startContainer) || !body.contains(range.endContainer)) return;
      const start = range.startOffset;
      const end = range.endOffset;
      if (end > start) {
        void this.reclassifySpan(start, end);
      }
    });
    hint.append(button);
    if (state.spans.length > 0) {
      const spanBar = el("div", "span-bar");
      const whole = el("button", state.activeSpan === null ? "active" : "", "Ganze Mail");
      whole.addEventListener("click", () => {
        this.state = activateSpan(state, null);
        this.render();
      });
      spanBar.append(whole);
      state.spans.forEach((span, i) => {
        const label = `Teil ${i + 1} [${span.start}-${span.end}]`;
        const chip = el("button", state.activeSpan === i ? "active" : "", label);
        chip.addEventListener("click", () => {
          this.state = activateSpan(state, i);
          this.render();
        });
        spanBar.append(chip);
      });
      pane.append(spanBar);
    }
    pane.append(hint);
    return pane;
  }

  private renderTabs(state: ComposeState): HTMLElement {
    const section = el("section", "proposals");
    const proposals = activeProposals(state);
    if (state.degraded) {
      section.append(el("p", "degraded", "Keine Vorschläge verfügbar."));
      return section;
    }
    const tabs = el("div", "tabs");
    tabs.setAttribute("role", "tablist");
    for (const proposal of proposals) {
      const isSelected = state.selected?.rank === proposal.rank
        && state.selected?.categoryId === proposal.category_id;
      const tab = el("button", "tab" + (isSelected ? " active" : ""));
      tab.setAttribute("role", "tab");
      tab.dataset.rank = String(proposal.rank);
      tab.append(el("span", "rank", `#${proposal.rank}`));
      tab.append(el("span", "name", proposal.name));
      tab.append(el("span", "score", proposal.score.toFixed(3)));
      tab.addEventListener("click", () => {
        this.state = selectProposal(state, proposal.rank);
        this.render();
      });
      tabs.append(tab);
    }
    section.append(tabs);
    return section;
  }

  private renderComposer(state: ComposeState): HTMLElement {
    const section = el("section", "composer");
    const header = state.selected
      ? `Antwort: ${state.selected.categoryName}` +
        (state.selected.source === "manual" ? " (manuell)" : "")
      : "Antwort: noch nichts ausgewählt";
    section.append(el("h3", undefined, header));
    const body = el("textarea", "draft-body");
    body.value = state.draftBody;
    body.rows = 8;
    body.addEventListener("input", () => {
      // mutate quietly: no re-render needed while typing
      if (this.state) this.state = editDraftBody(this.state, body.value);
    });
    section.append(body);
    section.append(el("pre", "quote", quoteOriginal(state.mail.text)));
    const send = el("button", "submit", "Antwort übernehmen");
    send.disabled = !canSubmit(state);
    send.addEventListener("click", () => void this.submit());
    section.append(send);
    const preview = el("details", "preview");
    preview.append(el("summary", undefined, "Gesamter Entwurf"));
    preview.append(el("pre", undefined, draftText(state)));
    section.append(preview);
    return section;
  }

  private renderCategoryPanel(state: ComposeState): HTMLElement {
    const panel = el("aside", "category-panel");
    panel.append(el("h3", undefined, "Kategorien"));
    if (!this.categories) {
      panel.append(el("p", "hint", "Registry nicht erreichbar."));
      return panel;
    }
    for (const group of groupByPrefix(this.categories.categories)) {
      const details = el("details");
      const active = state.selected
        ? group.categories.some((c) => c.id === state.selected?.categoryId)
        : false;
      if (active) details.open = true;
      details.append(el("summary", undefined, group.label));
      const list = el("ul");
      for (const category of group.categories) {
        const item = el("li");
        const pick = el(
          "button",
          "category" + (category.learnable ? "" : " not-learnable"),
          leafName(category),
        );
        pick.title = category.learnable
          ? `${category.doc_count} Dokumente`
          : `noch nicht lernbar (${category.doc_count} Dokumente)`;
        pick.addEventListener("click", () => {
          this.state = selectManual(state, category.id, category.name, category.answer_template);
          this.render();
        });
        item.append(pick);
        list.append(item);
      }
      details.append(list);
      panel.append(details);
    }
    return panel;
  }

  private renderHistoryPanel(): HTMLElement {
    const panel = el("aside", "history-panel");
    panel.append(el("h3", undefined, "Verlauf"));
    if (!this.history || this.history.entries.length === 0) {
      panel.append(el("p", "hint", "Keine früheren Mails dieses Absenders."));
      return panel;
    }
    const list = el("ul");
    for (const entry of this.history.entries) {
      const item = el("li", "history-entry");
      const elapsed =
        entry.elapsed_seconds !== null ? ` - beantwortet nach ${Math.round(entry.elapsed_seconds)}s` : "";
      item.append(el("div", "meta", `${entry.received_at}${elapsed}`));
      item.append(el("div", "chosen", entry.chosen_category ?? "(ohne Antwort)"));
      item.append(el("div", "text", entry.text.slice(0, 160)));
      list.append(item);
    }
    panel.append(list);
    return panel;
  }

  /** Test hook: current immutable state snapshot. */
  getState(): ComposeState | null {
    return this.state;
  }
}
