/**
 * Inquiry board: open questions grouped by status. Clicking an issue jumps
 * the narrative panel to the sentence that raised it.
 */

import type { Store } from "../state";

const STATUS_ORDER = ["open", "resolved", "stalled"] as const;

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

export class InquiryPanel {
  constructor(
    private root: HTMLElement,
    private store: Store,
  ) {
    store.subscribe(() => this.render());
  }

  render(): void {
    this.root.replaceChildren();
    this.root.append(el("h2", undefined, "Inquiry board"));
    const snap = this.store.state.snapshot;
    if (!snap) {
      this.root.append(el("p", "empty", "No session yet."));
      return;
    }
    for (const status of STATUS_ORDER) {
      const issues = snap.inquiry[status] ?? [];
      const section = el("section", `inquiry-group ${status}`);
      section.append(
        el("h3", undefined, `${status} (${issues.length})`),
      );
      const list = el("ul");
      for (const issue of issues) {
        const item = el("li", "issue");
        item.dataset.qid = issue.qid;
        const title = el("span", "issue-title", issue.title);
        title.onclick = () => this.jump(issue.sentenceRefs[0]);
        item.append(title);
        if (issue.links && issue.links.length > 0) {
          item.append(
            el(
              "span",
              "issue-links",
              issue.links.map((l) => `${l.type} ${l.qid}`).join(", "),
            ),
          );
        }
        list.append(item);
      }
      section.append(list);
      this.root.append(section);
    }
  }

  private jump(sentenceId: string | undefined): void {
    if (!sentenceId) return;
    this.store.update({ selectedSentenceId: sentenceId });
    const row = document.querySelector(
      `[data-sentence-id="${sentenceId}"]`,
    );
    row?.scrollIntoView({ behavior: "smooth", block: "center" });
  }
}
