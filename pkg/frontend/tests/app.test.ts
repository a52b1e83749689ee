// @vitest-environment jsdom
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatApp, createChatApp } from "../src/app.js";
import type { AnswerBundle, DocumentContext, SourceRef } from "../src/types.js";

const DOC_TEXT =
  "Intro paragraph about the facility.\n\n" +
  "The varnok2 assembly couples the quellit2 readout to the main controller.\n\n" +
  "Closing remarks about maintenance.";

const CORE_START = DOC_TEXT.indexOf("The varnok2");
const CORE_END = DOC_TEXT.indexOf("\n\nClosing");

function makeSource(i: number, overrides: Partial<SourceRef> = {}): SourceRef {
  return {
    doc_id: `doc${i}`,
    title: `Technical note ${i}`,
    best_score: 0.95 - i * 0.1,
    snippet: `snippet for doc${i}`,
    chunk_id: `doc${i}:fixed-800:0000`,
    char_start: 0,
    char_end: 10,
    page_hint: i + 1,
    ...overrides,
  };
}

function makeBundle(overrides: Partial<AnswerBundle> = {}): AnswerBundle {
  return {
    question: "How is the varnok2 coupled?",
    answer: "Through the quellit2 readout.",
    sources: [0, 1, 2, 3, 4].map((i) => makeSource(i)),
    retrieved: [],
    prompt_tokens_estimate: 400,
    truncation_flag: false,
    ...overrides,
  };
}

function jsonResponse(data: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: `status ${status}`,
    json: async () => data,
  } as unknown as Response;
}

let fetchMock: ReturnType<typeof vi.fn>;
let app: ChatApp;
let root: HTMLElement;

beforeEach(() => {
  fetchMock = vi.fn();
  vi.stubGlobal("fetch", fetchMock);
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app")!;
  app = createChatApp(root, new ApiClient(""));
});

afterEach(() => {
  vi.unstubAllGlobals();
});

function input(): HTMLInputElement {
  return root.querySelector(".question-input")!;
}

function submitButton(): HTMLButtonElement {
  return root.querySelector(".submit-button")!;
}

function typeQuestion(text: string) {
  input().value = text;
  input().dispatchEvent(new Event("input"));
}

describe("question submission", () => {
  it("renders exactly the returned source cards in received order with 3-decimal scores", async () => {
    fetchMock.mockResolvedValueOnce(jsonResponse(makeBundle()));
    await app.submitQuestion("How is the varnok2 coupled?");

    const cards = root.querySelectorAll(".source-card");
    expect(cards).toHaveLength(5);
    const scores = [...root.querySelectorAll(".source-score")].map((n) => n.textContent);
    expect(scores).toEqual(["0.950", "0.850", "0.750", "0.650", "0.550"]);
    const titles = [...root.querySelectorAll(".source-title")].map((n) => n.textContent);
    expect(titles).toEqual([0, 1, 2, 3, 4].map((i) => `Technical note ${i}`));
    expect(root.querySelector(".turn-answer")!.textContent).toContain(
      "Through the quellit2 readout.",
    );
  });

  it("renders sources verbatim without re-ranking, even if the server order is odd", async () => {
    const shuffled = [makeSource(3), makeSource(0), makeSource(4)];
    fetchMock.mockResolvedValueOnce(jsonResponse(makeBundle({ sources: shuffled })));
    await app.submitQuestion("q");
    const titles = [...root.querySelectorAll(".source-title")].map((n) => n.textContent);
    expect(titles).toEqual(["Technical note 3", "Technical note 0", "Technical note 4"]);
  });

  it("shows a truncation badge when the flag is set", async () => {
    fetchMock.mockResolvedValueOnce(jsonResponse(makeBundle({ truncation_flag: true })));
    await app.submitQuestion("q");
    expect(root.querySelector(".truncation-badge")).not.toBeNull();
  });

  it("disables submit for empty input and enables it for text", () => {
    expect(submitButton().disabled).toBe(true);
    typeQuestion("   ");
    expect(submitButton().disabled).toBe(true);
    typeQuestion("real question");
    expect(submitButton().disabled).toBe(false);
  });

  it("disables the input while a request is in flight", async () => {
    let resolve!: (value: Response) => void;
    fetchMock.mockReturnValueOnce(new Promise<Response>((r) => (resolve = r)));
    const pending = app.submitQuestion("slow question");
    expect(input().disabled).toBe(true);
    expect(submitButton().disabled).toBe(true);
    resolve(jsonResponse(makeBundle()));
    await pending;
    expect(input().disabled).toBe(false);
  });

  it("renders an inline error turn on API failure and keeps prior history", async () => {
    fetchMock.mockResolvedValueOnce(jsonResponse(makeBundle()));
    await app.submitQuestion("first question");
    fetchMock.mockResolvedValueOnce(
      jsonResponse({ error: "GatewayError", detail: "model server down" }, 500),
    );
    await app.submitQuestion("second question");

    const turns = root.querySelectorAll(".turn");
    expect(turns).toHaveLength(2);
    expect(turns[0].querySelector(".turn-answer")!.textContent).toContain(
      "Through the quellit2 readout.",
    );
    const error = root.querySelector(".turn-error .error-message")!;
    expect(error.textContent).toContain("model server down");
    expect(app.history).toHaveLength(1); // append-only; the failure added no turn
    expect(input().disabled).toBe(false); // re-enabled after the failure
  });

  it("ignores blank submissions", async () => {
    await app.submitQuestion("   ");
    expect(fetchMock).not.toHaveBeenCalled();
    expect(root.querySelectorAll(".turn")).toHaveLength(0);
  });
});

describe("source context viewer", () => {
  async function openFirstSource(context: DocumentContext | { status: number }) {
    fetchMock.mockResolvedValueOnce(
      jsonResponse(
        makeBundle({
          sources: [
            makeSource(0, {
              doc_id: "en02",
              chunk_id: "en02:fixed-800:0001",
              char_start: CORE_START,
              char_end: CORE_END,
              page_hint: 2,
            }),
          ],
        }),
      ),
    );
    await app.submitQuestion("q");
    if ("status" in context) {
      fetchMock.mockResolvedValueOnce(
        jsonResponse({ error: "not_found", detail: "unknown document" }, context.status),
      );
    } else {
      fetchMock.mockResolvedValueOnce(jsonResponse(context));
    }
    (root.querySelector(".source-card") as HTMLElement).click();
    await vi.waitFor(() => {
      expect(root.querySelector(".viewer-body")!.textContent).not.toContain("loading");
    });
  }

  it("opens the document with the cited span highlighted (equal to the chunk core text)", async () => {
    await openFirstSource({
      doc_id: "en02",
      title: "Technical note EN-2",
      text: DOC_TEXT,
      highlight: { char_start: CORE_START, char_end: CORE_END },
    });
    const viewer = root.querySelector(".viewer") as HTMLElement;
    expect(viewer.hidden).toBe(false);
    expect(root.querySelector(".viewer-title")!.textContent).toBe("Technical note EN-2");
    expect(root.querySelector(".viewer-page")!.textContent).toBe("page 2");
    const mark = root.querySelector(".context-highlight")!;
    expect(mark.textContent).toBe(DOC_TEXT.slice(CORE_START, CORE_END));
    expect(root.querySelector(".viewer-body")!.textContent).toBe(DOC_TEXT);
    const [url] = fetchMock.mock.calls[1];
    expect(String(url)).toContain("/api/documents/en02/context");
    expect(String(url)).toContain("chunk_id=en02%3Afixed-800%3A0001");
  });

  it("scrolls to the top when the highlight starts at the document start", async () => {
    const scrollSpy = vi.fn();
    (Element.prototype as unknown as { scrollIntoView: unknown }).scrollIntoView = scrollSpy;
    await openFirstSource({
      doc_id: "en02",
      title: "Technical note EN-2",
      text: DOC_TEXT,
      highlight: { char_start: 0, char_end: CORE_START },
    });
    const body = root.querySelector(".viewer-body")!;
    expect(body.scrollTop).toBe(0);
    expect(body.firstElementChild!.textContent).toBe(""); // nothing before the mark
    expect(scrollSpy).toHaveBeenCalled();
    delete (Element.prototype as unknown as { scrollIntoView?: unknown }).scrollIntoView;
  });

  it("renders a document-unavailable notice on 404 without breaking the chat", async () => {
    await openFirstSource({ status: 404 });
    expect(root.querySelector(".viewer-notice")!.textContent).toBe("document unavailable");
    expect(root.querySelectorAll(".turn")).toHaveLength(1); // history untouched
  });
});

describe("health strip", () => {
  it("shows index metadata", async () => {
    fetchMock.mockResolvedValueOnce(
      jsonResponse({
        status: "ok",
        index: {
          strategy: "fixed-800",
          translated: true,
          embed_model: "m",
          entries: 32,
          dims: 64,
        },
      }),
    );
    await app.loadHealth();
    expect(root.querySelector(".health")!.textContent).toBe(
      "index: fixed-800 (translated) · 32 chunks",
    );
  });

  it("degrades quietly when the backend is down", async () => {
    fetchMock.mockRejectedValueOnce(new Error("connection refused"));
    await app.loadHealth();
    expect(root.querySelector(".health")!.textContent).toBe("backend unreachable");
  });
});
