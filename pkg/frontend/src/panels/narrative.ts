/**
 * Narrative panel: the sentence editor canvas.
 *
 * Linear mode shows the active path with per-sentence actions (edit, insert
 * after, delete, Show View, Create Branch). Tree mode shows every branch so
 * abandoned paths stay visible and clickable.
 */

import type { SentenceJson } from "../api";
import type { Store } from "../state";

interface TreeNodeJson {
  sentence_id: string;
  parent_id: string | null;
  child_ids: string[];
  content: string;
  tombstone?: boolean;
}

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

export class NarrativePanel {
  constructor(
    private root: HTMLElement,
    private store: Store,
  ) {
    store.subscribe(() => this.render());
  }

  private sid(): string {
    const sid = this.store.state.sessionId;
    if (!sid) throw new Error("no session");
    return sid;
  }

  private async run(action: () => Promise<unknown>, label: string): Promise<void> {
    try {
      await action();
      await this.store.refresh();
      this.store.update({ statusLine: label });
    } catch (err) {
      const e = err as { code?: string; message?: string };
      this.store.update({
        statusLine: `${label} failed: ${e.code ?? ""} ${e.message ?? err}`,
      });
    }
  }

  render(): void {
    const snap = this.store.state.snapshot;
    this.root.replaceChildren();
    const header = el("div", "panel-header");
    header.append(el("h2", undefined, "Narrative"));

    const toggle = el("button", "mode-toggle");
    toggle.textContent =
      this.store.state.viewMode === "linear" ? "tree view" : "linear view";
    toggle.onclick = () =>
      this.store.update({
        viewMode: this.store.state.viewMode === "linear" ? "tree" : "linear",
      });
    header.append(toggle);
    this.root.append(header);

    if (!snap) {
      this.root.append(el("p", "empty", "No session yet."));
      return;
    }

    if (this.store.state.viewMode === "linear") {
      this.renderLinear(snap.active_path);
    } else {
      this.renderTree(
        snap.tree.nodes as unknown as TreeNodeJson[],
        snap.tree.root_id,
        snap.active_path.map((s) => s.sentence_id),
      );
    }
    this.renderComposer();
  }

  private renderLinear(path: SentenceJson[]): void {
    const list = el("ol", "sentence-list");
    for (const sentence of path) {
      list.append(this.sentenceRow(sentence));
    }
    this.root.append(list);
  }

  private sentenceRow(sentence: SentenceJson): HTMLLIElement {
    const item = el("li", "sentence");
    item.dataset.sentenceId = sentence.sentence_id;
    if (sentence.sentence_id === this.store.state.selectedSentenceId) {
      item.classList.add("selected");
    }
    const text = el("span", "content", sentence.content);
    if (sentence.author === "captured") {
      text.classList.add("captured");
      text.title = "captured from a chart interaction";
    }
    text.onclick = () =>
      this.store.update({ selectedSentenceId: sentence.sentence_id });
    item.append(text);

    const actions = el("span", "actions");
    actions.append(
      this.actionButton("show view", () =>
        this.run(async () => {
          const view = await this.store.client.showView(
            this.sid(),
            sentence.sentence_id,
          );
          this.store.update({ currentView: view });
        }, "show view"),
      ),
      this.actionButton("branch", () =>
        this.run(
          () => this.store.client.createBranch(this.sid(), sentence.sentence_id),
          "create branch",
        ),
      ),
      this.actionButton("edit", () => {
        const next = window.prompt("Edit sentence", sentence.content);
        if (next && next.trim()) {
          void this.run(
            () =>
              this.store.client.updateSentence(
                this.sid(),
                sentence.sentence_id,
                next,
              ),
            "edit",
          );
        }
      }),
      this.actionButton("insert after", () => {
        const next = window.prompt("New sentence after this one", "");
        if (next && next.trim()) {
          void this.run(
            () =>
              this.store.client.insertSentence(
                this.sid(),
                sentence.sentence_id,
                next,
              ),
            "insert",
          );
        }
      }),
      this.actionButton("delete", () =>
        this.run(
          () => this.store.client.deleteSentence(this.sid(), sentence.sentence_id),
          "delete",
        ),
      ),
    );
    item.append(actions);
    return item;
  }

  private actionButton(label: string, handler: () => void): HTMLButtonElement {
    const button = el("button", "action", label);
    button.onclick = handler;
    return button;
  }

  private renderTree(
    nodes: TreeNodeJson[],
    rootId: string | null,
    activeIds: string[],
  ): void {
    const byId = new Map(nodes.map((n) => [n.sentence_id, n]));
    const active = new Set(activeIds);
    const container = el("div", "tree-view");
    const walk = (id: string, depth: number): void => {
      const node = byId.get(id);
      if (!node) return;
      const row = el("div", "tree-node", node.content);
      row.style.marginLeft = `${depth * 16}px`;
      if (active.has(id)) row.classList.add("on-active-path");
      row.onclick = () => this.store.update({ selectedSentenceId: id });
      container.append(row);
      for (const child of node.child_ids) walk(child, depth + 1);
    };
    if (rootId) walk(rootId, 0);
    this.root.append(container);
  }

  private renderComposer(): void {
    const form = el("form", "composer");
    const input = el("input") as HTMLInputElement;
    input.placeholder = "Write the next sentence of your exploration";
    const submit = el("button", undefined, "append");
    submit.type = "submit";
    form.append(input, submit);
    form.onsubmit = (evt) => {
      evt.preventDefault();
      const content = input.value.trim();
      if (!content) return;
      input.value = "";
      void this.run(
        () => this.store.client.appendSentence(this.sid(), content),
        "append",
      );
    };
    this.root.append(form);
  }
}
