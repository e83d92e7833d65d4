/** Console round-trip against the stateful fake service, rendered in a real
 * DOM: load a mail, see five tabs, pick rank 2, submit, and verify the store
 * holds the original text byte for byte under the chosen category. */

// @vitest-environment happy-dom

import { beforeEach, describe, expect, it } from "vitest";

import { ApiError, AssistClient } from "../src/api.js";
import { ConsoleApp } from "../src/ui.js";
import type { Mail } from "../src/types.js";
import { FakeService } from "./fakeService.js";

const MAIL: Mail = {
  sender: "kunde17@example.org",
  received_at: "2000-03-02T08:30:00Z",
  text: "Mein Drucker druckt keine Seiten mehr.\nAußerdem: wie ändere ich mein Kennwort für den Zugang?",
};

function tabs(root: HTMLElement): HTMLButtonElement[] {
  return [...root.querySelectorAll<HTMLButtonElement>(".tabs .tab")];
}

describe("console round trip", () => {
  let service: FakeService;
  let client: AssistClient;
  let root: HTMLElement;
  let app: ConsoleApp;

  beforeEach(() => {
    service = new FakeService();
    client = new AssistClient("", service.fetch);
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app") as HTMLElement;
    app = new ConsoleApp(client, root);
  });

  it("renders five tabs with rank 1 active after loading", async () => {
    await app.loadMail(MAIL);
    const rendered = tabs(root);
    expect(rendered).toHaveLength(5);
    expect(rendered[0]?.classList.contains("active")).toBe(true);
    expect(rendered[0]?.dataset.rank).toBe("1");
    // drucker keywords dominate the whole-mail ranking
    expect(app.getState()?.selected?.categoryId).toBe("cat-drucker");
  });

  it("select rank 2, submit, and the store holds the original text", async () => {
    await app.loadMail(MAIL);
    const rank2 = tabs(root)[1];
    expect(rank2).toBeDefined();
    rank2!.click();
    const chosen = app.getState()?.selected;
    expect(chosen?.rank).toBe(2);

    const recordId = await app.submit();
    expect(recordId).toBe("rec-000001");
    expect(service.records).toHaveLength(1);
    const record = service.records[0]!;
    expect(record.text).toBe(MAIL.text); // byte-identical original
    expect(record.category).toBe(chosen!.categoryId);
    expect(record.edited_text?.includes("> Mein Drucker druckt keine Seiten mehr.")).toBe(
      true,
    );
  });

  it("span reclassification replaces the tab set", async () => {
    await app.loadMail(MAIL);
    const before = tabs(root).map((t) => t.textContent);
    const spanStart = MAIL.text.indexOf("wie ändere");
    await app.reclassifySpan(spanStart, MAIL.text.length);
    const after = tabs(root).map((t) => t.textContent);
    expect(after).not.toEqual(before);
    // the span talks about kennwort/zugang, so that category now leads
    expect(app.getState()?.selected?.categoryId).toBe("cat-zugang");
    // the service saw the span request with offsets
    const last = service.classifyCalls.at(-1);
    expect(last?.span).toEqual([spanStart, MAIL.text.length]);
    // switching back to the whole mail restores the original tabs
    const wholeButton = [...root.querySelectorAll<HTMLButtonElement>(".span-bar button")][0];
    wholeButton!.click();
    expect(tabs(root).map((t) => t.textContent)).toEqual(before);
  });

  it("degraded mode shows a banner and manual selection still submits", async () => {
    service.modelMissing = true;
    await app.loadMail(MAIL);
    expect(root.querySelector(".banner")?.textContent).toMatch(/Kein Modell/);
    expect(tabs(root)).toHaveLength(0);
    const manual = root.querySelector<HTMLButtonElement>(".category-panel button.category");
    expect(manual).not.toBeNull();
    manual!.click();
    const recordId = await app.submit();
    expect(recordId).toBe("rec-000001");
    expect(service.records[0]?.text).toBe(MAIL.text);
  });

  it("history panel renders prior answers of the sender", async () => {
    await app.loadMail(MAIL);
    await app.submit();
    await app.loadMail(MAIL); // reload: history now holds the stored answer
    const entries = root.querySelectorAll(".history-entry");
    expect(entries.length).toBe(1);
    expect(entries[0]?.textContent).toContain("beantwortet nach 42s");
  });

  it("api errors other than model-missing propagate", async () => {
    await expect(
      new AssistClient("", service.fetch).classify("   "),
    ).rejects.toThrowError(ApiError);
  });
});
