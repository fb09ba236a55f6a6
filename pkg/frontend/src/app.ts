// Composition root: tabs over the five screens, wired to one store and one
// API client.

import { ApiClient } from "./api.js";
import { TrainingDashboard } from "./dashboard.js";
import { el } from "./dom.js";
import { FilterTuning } from "./filter.js";
import { GalleryReview } from "./gallery.js";
import { GrammarBuilder } from "./grammar.js";
import { InferenceScreen } from "./inference.js";
import { Store } from "./store.js";

export interface Console {
  root: HTMLElement;
  store: Store;
  api: ApiClient;
  builder: GrammarBuilder;
  gallery: GalleryReview;
  filter: FilterTuning;
  dashboard: TrainingDashboard;
  inference: InferenceScreen;
}

export function createConsole(base = ""): Console {
  const api = new ApiClient(base);
  const store = new Store();
  const dashboard = new TrainingDashboard(api);
  const builder = new GrammarBuilder(api, store, (ref) => {
    void dashboard.follow(ref.job_id);
  });
  const gallery = new GalleryReview(api, store);
  const filter = new FilterTuning(api, store);
  const inference = new InferenceScreen(api, store);

  const screens: Array<[string, HTMLElement]> = [
    ["Define", builder.root],
    ["Review", gallery.root],
    ["Filter", filter.root],
    ["Train", dashboard.root],
    ["Predict", inference.root],
  ];
  const nav = el("nav", { class: "tabs" });
  const body = el("main", { class: "screen-host" });
  screens.forEach(([label, screen], index) => {
    const tab = el("button", { class: "tab", "data-screen": label.toLowerCase() }, [label]);
    tab.addEventListener("click", () => {
      screens.forEach(([, s]) => (s.style.display = "none"));
      screen.style.display = "";
    });
    nav.append(tab);
    if (index > 0) screen.style.display = "none";
    body.append(screen);
  });

  const root = el("div", { class: "air-console" }, [
    el("header", {}, [el("h1", {}, ["air console"])]),
    nav,
    body,
  ]);
  return { root, store, api, builder, gallery, filter, dashboard, inference };
}

export function mount(target: HTMLElement, base = ""): Console {
  const instance = createConsole(base);
  target.append(instance.root);
  return instance;
}
