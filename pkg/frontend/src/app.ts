import { ApiClient, ApiError } from "./api.js";
import type { ChatTurn, DocumentContext, SourceRef } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

/**
 * The chat pane plus the document-context viewer.
 *
 * The UI renders server responses verbatim: source cards appear exactly in
 * the order received (score-descending from the server) and no scoring or
 * re-ranking happens client-side. Chat history is append-only for the
 * session; failed requests render as inline error turns without touching
 * earlier turns.
 */
export class ChatApp {
  readonly history: ChatTurn[] = [];

  private inFlight = false;
  private readonly input: HTMLInputElement;
  private readonly submitButton: HTMLButtonElement;
  private readonly historyEl: HTMLElement;
  private readonly healthEl: HTMLElement;
  private readonly viewerEl: HTMLElement;
  private readonly viewerTitle: HTMLElement;
  private readonly viewerPage: HTMLElement;
  private readonly viewerBody: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    const chatPane = el("div", "chat-pane");
    this.healthEl = el("div", "health");
    this.historyEl = el("div", "history");

    const form = el("form", "ask-form");
    this.input = el("input", "question-input");
    this.input.placeholder = "Ask about the documentation…";
    this.submitButton = el("button", "submit-button", "Ask");
    this.submitButton.type = "submit";
    this.submitButton.disabled = true;
    form.append(this.input, this.submitButton);

    this.input.addEventListener("input", () => this.updateSubmitState());
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitQuestion(this.input.value);
    });

    chatPane.append(this.healthEl, this.historyEl, form);

    this.viewerEl = el("aside", "viewer");
    this.viewerEl.hidden = true;
    const viewerHeader = el("div", "viewer-header");
    this.viewerTitle = el("h2", "viewer-title");
    this.viewerPage = el("span", "viewer-page");
    const close = el("button", "viewer-close", "✕");
    close.type = "button";
    close.addEventListener("click", () => {
      this.viewerEl.hidden = true;
    });
    viewerHeader.append(this.viewerTitle, this.viewerPage, close);
    this.viewerBody = el("div", "viewer-body");
    this.viewerEl.append(viewerHeader, this.viewerBody);

    root.append(chatPane, this.viewerEl);
  }

  /** Fill the health strip; failures here never block the chat. */
  async loadHealth(): Promise<void> {
    try {
      const health = await this.api.health();
      this.healthEl.textContent =
        `index: ${health.index.strategy}` +
        `${health.index.translated ? " (translated)" : ""} · ` +
        `${health.index.entries} chunks`;
    } catch {
      this.healthEl.textContent = "backend unreachable";
    }
  }

  async submitQuestion(text: string): Promise<void> {
    const question = text.trim();
    if (!question || this.inFlight) return;
    this.setInFlight(true);
    try {
      const bundle = await this.api.query(question);
      this.appendTurn({
        question,
        answer: bundle.answer,
        sources: bundle.sources,
        truncation_flag: bundle.truncation_flag,
        timestamp: new Date().toISOString(),
      });
      this.input.value = "";
    } catch (err) {
      this.appendErrorTurn(question, err);
    } finally {
      this.setInFlight(false);
    }
  }

  async openSource(source: SourceRef): Promise<void> {
    this.viewerEl.hidden = false;
    this.viewerTitle.textContent = source.title;
    this.viewerPage.textContent = `page ${source.page_hint}`;
    this.viewerBody.replaceChildren(el("p", "viewer-notice", "loading…"));
    try {
      const ctx = await this.api.documentContext(source.doc_id, source.chunk_id);
      this.renderContext(ctx);
    } catch (err) {
      const message =
        err instanceof ApiError && err.status === 404
          ? "document unavailable"
          : err instanceof Error
            ? err.message
            : String(err);
      this.viewerBody.replaceChildren(el("p", "viewer-notice", message));
    }
  }

  private renderContext(ctx: DocumentContext): void {
    this.viewerTitle.textContent = ctx.title;
    this.viewerBody.replaceChildren();
    if (ctx.highlight) {
      const { char_start, char_end } = ctx.highlight;
      const mark = el("mark", "context-highlight", ctx.text.slice(char_start, char_end));
      this.viewerBody.append(
        el("span", "", ctx.text.slice(0, char_start)),
        mark,
        el("span", "", ctx.text.slice(char_end)),
      );
      this.viewerBody.scrollTop = 0;
      if (typeof mark.scrollIntoView === "function") {
        mark.scrollIntoView({ block: "center" });
      }
    } else {
      this.viewerBody.append(el("span", "", ctx.text));
      this.viewerBody.scrollTop = 0;
    }
  }

  private appendTurn(turn: ChatTurn): void {
    this.history.push(turn);
    const node = el("div", "turn");
    node.append(el("div", "turn-question", turn.question));
    const answer = el("div", "turn-answer", turn.answer);
    if (turn.truncation_flag) {
      answer.append(el("span", "truncation-badge", "context window raised"));
    }
    node.append(answer);

    const sources = el("div", "sources");
    for (const source of turn.sources) {
      sources.append(this.sourceCard(source));
    }
    node.append(sources);
    this.historyEl.append(node);
  }

  private sourceCard(source: SourceRef): HTMLElement {
    const card = el("button", "source-card");
    card.type = "button";
    const header = el("div", "source-header");
    header.append(
      el("span", "source-title", source.title),
      el("span", "source-score", source.best_score.toFixed(3)),
      el("span", "source-page", `p. ${source.page_hint}`),
    );
    card.append(header, el("div", "source-snippet", source.snippet));
    card.addEventListener("click", () => void this.openSource(source));
    return card;
  }

  private appendErrorTurn(question: string, err: unknown): void {
    const node = el("div", "turn turn-error");
    node.append(el("div", "turn-question", question));
    const message =
      err instanceof ApiError
        ? `request failed (${err.status}): ${err.detail}`
        : err instanceof Error
          ? `request failed: ${err.message}`
          : "request failed";
    node.append(el("div", "error-message", message));
    this.historyEl.append(node);
  }

  private setInFlight(value: boolean): void {
    this.inFlight = value;
    this.input.disabled = value;
    this.updateSubmitState();
  }

  private updateSubmitState(): void {
    this.submitButton.disabled = this.inFlight || this.input.value.trim() === "";
  }
}

export function createChatApp(root: HTMLElement, api: ApiClient): ChatApp {
  return new ChatApp(root, api);
}
