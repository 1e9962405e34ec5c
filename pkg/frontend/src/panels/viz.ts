/**
 * Visualization canvas: renders the current view (single chart or dashboard),
 * forwards hover/click on chart marks as interaction events, and hosts the
 * Capture button with its accept / reject / no-insight flow.
 */

import type {
  CaptureSuggestionWire,
  ShowViewResult,
  ViewJson,
} from "../api";
import { isDashboard } from "../api";
import { geometryToSvg, layoutChart } from "../chart";
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

export class VisualizationPanel {
  private pendingSuggestion: CaptureSuggestionWire | null = null;
  private captureState: "idle" | "pending" | "none" = "idle";

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

  render(): void {
    this.root.replaceChildren();
    const header = el("div", "panel-header");
    header.append(el("h2", undefined, "Visualization"));
    const captureButton = el("button", "capture", "Capture");
    captureButton.onclick = () => void this.capture();
    header.append(captureButton);
    this.root.append(header);

    const view = this.store.state.currentView;
    if (!view) {
      this.root.append(
        el("p", "empty", "Select a sentence and press show view."),
      );
    } else if (isDashboard(view)) {
      const grid = el("div", "dashboard");
      grid.style.gridTemplateColumns = `repeat(${view.layout.cols}, 1fr)`;
      for (const child of view.views) {
        grid.append(this.chartCard(child, view));
      }
      this.root.append(grid);
    } else {
      this.root.append(this.chartCard(view, null));
    }
    this.renderCaptureTray();
  }

  private chartCard(view: ViewJson, parent: ShowViewResult | null): HTMLElement {
    const card = el("figure", "chart-card");
    card.append(el("figcaption", undefined, view.title));
    const holder = el("div", "chart-holder");
    const geometry = layoutChart(view.grammar_spec);
    holder.innerHTML = geometryToSvg(geometry);
    holder.querySelectorAll(".hit").forEach((target) => {
      const index = Number((target as SVGElement).dataset.index);
      const datum = geometry.targets[index]?.datum ?? {};
      target.addEventListener("mouseenter", () =>
        void this.emit(view, parent, "hover", datum),
      );
      target.addEventListener("click", () =>
        void this.emit(view, parent, "click", datum),
      );
    });
    card.append(holder);
    card.append(el("p", "caption", view.caption));
    return card;
  }

  private async emit(
    view: ViewJson,
    parent: ShowViewResult | null,
    action: "hover" | "click",
    datum: unknown,
  ): Promise<void> {
    const dashboardTitle =
      parent && isDashboard(parent) ? `dashboard ${parent.dashboard_id}` : view.title;
    try {
      await this.store.client.recordEvent(this.sid(), {
        elementId: view.view_id,
        elementName: view.title,
        elementType: "chart",
        action,
        dashboardConfig: { title: dashboardTitle },
        chartData: datum,
        timestamp: Date.now() / 1000,
      });
    } catch {
      this.store.update({ statusLine: "interaction event rejected" });
    }
  }

  private async capture(): Promise<void> {
    try {
      const suggestion = await this.store.client.capture(this.sid());
      if (suggestion.narrative_suggestion === null) {
        this.pendingSuggestion = null;
        this.captureState = "none";
      } else {
        this.pendingSuggestion = suggestion;
        this.captureState = "pending";
      }
    } catch (err) {
      const e = err as { message?: string };
      this.store.update({ statusLine: `capture failed: ${e.message ?? err}` });
      return;
    }
    this.render();
  }

  private renderCaptureTray(): void {
    const tray = el("div", "capture-tray");
    if (this.captureState === "none") {
      tray.append(
        el("p", "no-insight", "No insight found in recent interactions."),
      );
      const dismiss = el("button", undefined, "ok");
      dismiss.onclick = () => {
        this.captureState = "idle";
        this.render();
      };
      tray.append(dismiss);
    } else if (this.captureState === "pending" && this.pendingSuggestion) {
      const s = this.pendingSuggestion;
      tray.append(el("p", "suggestion", s.narrative_suggestion ?? ""));
      tray.append(el("p", "explanation", s.explanation));
      const accept = el("button", "accept", "accept");
      accept.onclick = () => void this.resolveSuggestion(true);
      const reject = el("button", "reject", "reject");
      reject.onclick = () => void this.resolveSuggestion(false);
      tray.append(accept, reject);
    }
    this.root.append(tray);
  }

  private async resolveSuggestion(accepted: boolean): Promise<void> {
    const suggestion = this.pendingSuggestion;
    this.pendingSuggestion = null;
    this.captureState = "idle";
    if (accepted && suggestion) {
      try {
        await this.store.client.acceptCapture(this.sid(), suggestion);
        await this.store.refresh();
        this.store.update({ statusLine: "captured sentence added" });
        return;
      } catch (err) {
        const e = err as { message?: string };
        this.store.update({ statusLine: `accept failed: ${e.message ?? err}` });
      }
    }
    this.render();
  }
}
