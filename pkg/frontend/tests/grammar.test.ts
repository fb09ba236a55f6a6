import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { CATEGORY_LOCKED_MESSAGE, GrammarBuilder } from "../src/grammar.js";
import { Store } from "../src/store.js";
import { fetchStub, TABLE_GRAMMAR } from "./helpers.js";

function builderWith(stub = fetchStub()) {
  const api = new ApiClient("", stub.fetcher);
  const store = new Store();
  const builder = new GrammarBuilder(api, store);
  document.body.append(builder.root);
  return { builder, store, stub };
}

function loadTableGrammar(builder: GrammarBuilder, store: Store) {
  store.update({ draftGrammar: structuredClone(TABLE_GRAMMAR) });
  builder.setOptions(0, TABLE_GRAMMAR.contexts[0].options); // re-render via setter
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("grammar builder", () => {
  it("blocks removing the category context with an explanation", () => {
    const { builder } = builderWith();
    expect(builder.removeContext(0)).toBe(false);
    const message = document.querySelector(".builder-message");
    expect(message?.textContent).toBe(CATEGORY_LOCKED_MESSAGE);
    expect(builder.grammar().contexts.some((c) => c.name === "category")).toBe(true);
  });

  it("category removal button in the DOM is also blocked", () => {
    const { builder } = builderWith();
    const row = document.querySelector('.context-row[data-context="category"]');
    (row?.querySelector(".remove-context") as HTMLButtonElement).click();
    expect(builder.grammar().contexts.length).toBe(1);
    expect(document.querySelector(".builder-message")?.textContent).toBe(
      CATEGORY_LOCKED_MESSAGE,
    );
  });

  it("non-category contexts can be removed", () => {
    const { builder } = builderWith();
    builder.addContext("location", ["forest"]);
    expect(builder.removeContext(1)).toBe(true);
    expect(builder.grammar().contexts.length).toBe(1);
  });

  it("reordering contexts updates the keyword preview live", () => {
    const { builder, store } = builderWith();
    loadTableGrammar(builder, store);
    const preview = () => document.querySelector(".prompt-preview")?.textContent;
    expect(preview()).toBe("small fire and smoke, tropical forest, drone's view, morning");
    builder.moveContext(1, -1); // location above category
    expect(preview()).toBe("tropical forest, small fire and smoke, drone's view, morning");
    builder.moveContext(0, 1); // and back
    expect(preview()).toBe("small fire and smoke, tropical forest, drone's view, morning");
  });

  it("submitting the reference grammar sends the documented body", async () => {
    const stub = fetchStub();
    stub.respond((m, u) => u === "/v1/datasets", { dataset_id: "ds-1", job_id: "job-1" });
    const { builder, store } = builderWith(stub);
    loadTableGrammar(builder, store);
    const ref = await builder.submit();
    expect(ref).toEqual({ dataset_id: "ds-1", job_id: "job-1" });
    const request = stub.requests.find((r) => r.url === "/v1/datasets");
    expect(request?.method).toBe("POST");
    expect((request?.body as { grammar: unknown }).grammar).toEqual(TABLE_GRAMMAR);
    expect(store.get().selectedDataset).toBe("ds-1");
    expect(store.get().activeJobs).toContain("job-1");
  });

  it("invalid drafts never reach the network", async () => {
    const stub = fetchStub();
    const { builder } = builderWith(stub);
    // category has no options yet
    const result = await builder.submit();
    expect(result).toBeNull();
    expect(stub.requests.length).toBe(0);
    expect(document.querySelector(".builder-message")?.textContent).toContain("option");
  });

  it("mirrors server-side validation rules client-side", () => {
    const { builder } = builderWith();
    builder.setOptions(0, ["a", "a"]);
    expect(document.querySelector(".builder-message")?.textContent).toBe("");
    // duplicate options surface on submit
    void builder.submit();
    expect(document.querySelector(".builder-message")?.textContent).toContain("duplicate");
  });
});
