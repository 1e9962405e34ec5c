/**
 * Insight timeline canvas: one node per recorded change, grouped by branch,
 * with drift badges colored by severity and a restore action per node.
 */

import { driftBadge, severityColor, type Store } from "../state";

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

export class TimelinePanel {
  constructor(
    private root: HTMLElement,
    private store: Store,
  ) {
    store.subscribe(() => this.render());
  }

  render(): void {
    this.root.replaceChildren();
    this.root.append(el("h2", undefined, "Insight timeline"));
    const snap = this.store.state.snapshot;
    if (!snap || snap.timeline.length === 0) {
      this.root.append(el("p", "empty", "No insights recorded yet."));
      return;
    }

    const list = el("ul", "timeline");
    for (const node of snap.timeline) {
      const item = el("li", "timeline-node");
      item.dataset.nodeId = String(node.node_id);

      const badge = el("span", "drift-badge", driftBadge(node.changed_from_previous));
      badge.style.background = severityColor(
        node.changed_from_previous?.severity ?? "none",
      );
      item.append(badge);

      item.append(el("span", "branch-tag", node.branch_id));
      const content = el("span", "node-content", node.sentence_content);
      content.onclick = () =>
        this.store.update({ selectedSentenceId: node.sentence_id });
      item.append(content);

      if (node.changed_from_previous) {
        const dims = Object.entries(node.changed_from_previous.dimensions)
          .map(([aspect, change]) => `${aspect}: ${change}`)
          .join("; ");
        if (dims) item.append(el("span", "dims", dims));
      }

      const restore = el("button", "restore", "restore");
      restore.onclick = () => void this.restore(node.node_id);
      item.append(restore);
      list.append(item);
    }
    this.root.append(list);
  }

  private async restore(nodeId: number): Promise<void> {
    const sid = this.store.state.sessionId;
    if (!sid) return;
    try {
      const state = await this.store.client.restore(sid, nodeId);
      this.store.update({
        statusLine: `restored view of node ${nodeId} (${state.sentences.length} sentences)`,
      });
    } catch (err) {
      const e = err as { message?: string };
      this.store.update({ statusLine: `restore failed: ${e.message ?? err}` });
    }
  }
}
