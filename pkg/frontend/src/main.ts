/**
 * Entry point: builds the three canvases plus the inquiry board and story
 * mode, creates a session, and starts the 1s snapshot polling loop.
 */

import { StoryloomClient } from "./api";
import { InquiryPanel } from "./panels/inquiry";
import { NarrativePanel } from "./panels/narrative";
import { StoryPanel } from "./panels/story";
import { TimelinePanel } from "./panels/timeline";
import { VisualizationPanel } from "./panels/viz";
import { Store } from "./state";

const API_BASE =
  new URLSearchParams(window.location.search).get("api") ??
  "http://127.0.0.1:8000";

export async function boot(root: HTMLElement): Promise<Store> {
  const client = new StoryloomClient(API_BASE);
  const store = new Store(client);

  root.innerHTML = `
    <div id="layout">
      <div id="narrative" class="panel"></div>
      <div id="viz" class="panel"></div>
      <div id="right-rail">
        <div id="timeline" class="panel"></div>
        <div id="inquiry" class="panel"></div>
        <div id="story" class="panel"></div>
      </div>
    </div>
    <div id="status"></div>
  `;

  new NarrativePanel(root.querySelector("#narrative")!, store);
  new VisualizationPanel(root.querySelector("#viz")!, store);
  new TimelinePanel(root.querySelector("#timeline")!, store);
  new InquiryPanel(root.querySelector("#inquiry")!, store);
  new StoryPanel(root.querySelector("#story")!, store);

  const status = root.querySelector("#status")!;
  store.subscribe((state) => {
    status.textContent = state.statusLine;
  });

  const { session_id } = await client.createSession();
  store.update({ sessionId: session_id, statusLine: `session ${session_id}` });
  await store.refresh();
  store.startPolling();
  return store;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app")!);
}
