/**
 * Story mode: compiles the exploration into a data story on demand and shows
 * each point with links back to its evidence sentences (and their views).
 */

import type { Store } from "../state";

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

export function refsOf(refId: string | string[]): string[] {
  return Array.isArray(refId) ? refId : [refId];
}

export class StoryPanel {
  constructor(
    private root: HTMLElement,
    private store: Store,
  ) {
    store.subscribe(() => this.render());
  }

  render(): void {
    this.root.replaceChildren();
    const header = el("div", "panel-header");
    header.append(el("h2", undefined, "Story mode"));
    const compile = el("button", "compile", "Compile story");
    compile.onclick = () => void this.compile();
    header.append(compile);
    this.root.append(header);

    if (this.store.state.storyError) {
      this.root.append(el("p", "story-error", this.store.state.storyError));
    }
    const story = this.store.state.story;
    if (!story) {
      this.root.append(
        el("p", "empty", "Compile to turn the exploration into a story."),
      );
      return;
    }

    const snap = this.store.state.snapshot;
    const list = el("ol", "story");
    story.forEach((point) => {
      const item = el("li", "story-point");
      item.append(el("p", undefined, point.data_story_sentence));
      const evidence = el("span", "evidence");
      for (const ref of refsOf(point.ref_id)) {
        const link = el("a", "evidence-link", ref);
        link.href = "#";
        link.onclick = (evt) => {
          evt.preventDefault();
          this.store.update({ selectedSentenceId: ref });
        };
        evidence.append(link);
        const viewIds = snap?.links[ref] ?? [];
        if (viewIds.length > 0) {
          evidence.append(el("span", "evidence-views", `[${viewIds.join(", ")}]`));
        }
      }
      item.append(evidence);
      list.append(item);
    });
    this.root.append(list);
  }

  private async compile(): Promise<void> {
    const sid = this.store.state.sessionId;
    if (!sid) return;
    try {
      const story = await this.store.client.story(sid);
      this.store.update({ story, storyError: null, statusLine: "story compiled" });
    } catch (err) {
      const e = err as { message?: string; violations?: string[] };
      const detail = e.violations?.length
        ? ` (${e.violations.join("; ")})`
        : "";
      this.store.update({
        story: null,
        storyError: `${e.message ?? err}${detail}`,
      });
    }
  }
}
