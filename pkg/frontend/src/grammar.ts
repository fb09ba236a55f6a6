// Grammar builder: contexts with options, reorderable. Position is weight:
// the earlier a context sits, the more it steers the generated prompt, so
// the list order is the thing being edited. The category row is pinned
// mandatory and cannot be removed.

import type { ApiClient, GrammarSpec, JobRef, PipelineSettings } from "./api.js";
import { clear, el } from "./dom.js";
import type { Store } from "./store.js";
import { simplisticPreview, validateGrammar } from "./validate.js";

export const ORDER_HINT = "the earlier a context appears, the more it influences the prompt";
export const CATEGORY_LOCKED_MESSAGE =
  "the 'category' context is mandatory: it defines the class labels and cannot be removed";

export class GrammarBuilder {
  readonly root: HTMLElement;
  private list: HTMLElement;
  private preview: HTMLElement;
  private message: HTMLElement;
  private onSubmitted: (ref: JobRef) => void;

  constructor(
    private api: ApiClient,
    private store: Store,
    onSubmitted: (ref: JobRef) => void = () => {},
  ) {
    this.onSubmitted = onSubmitted;
    this.list = el("div", { class: "context-list" });
    this.preview = el("pre", { class: "prompt-preview" });
    this.message = el("p", { class: "builder-message", role: "alert" });
    const addButton = el("button", { class: "add-context" }, ["Add context"]);
    addButton.addEventListener("click", () => this.addContext());
    const submitButton = el("button", { class: "submit-grammar" }, ["Generate dataset"]);
    submitButton.addEventListener("click", () => void this.submit());
    this.root = el("section", { class: "screen grammar-builder" }, [
      el("h2", {}, ["Dataset definition"]),
      el("p", { class: "hint" }, [`Order matters: ${ORDER_HINT}.`]),
      this.list,
      addButton,
      el("h3", {}, ["Keyword preview"]),
      this.preview,
      this.message,
      submitButton,
    ]);
    this.render();
  }

  grammar(): GrammarSpec {
    return this.store.get().draftGrammar;
  }

  addContext(name = "", options: string[] = []): void {
    const grammar = this.grammar();
    this.setGrammar({
      contexts: [...grammar.contexts, { name, options, mandatory: false }],
    });
  }

  removeContext(index: number): boolean {
    const grammar = this.grammar();
    const target = grammar.contexts[index];
    if (!target) return false;
    if (target.name === "category") {
      this.message.textContent = CATEGORY_LOCKED_MESSAGE;
      this.render();
      return false;
    }
    this.setGrammar({ contexts: grammar.contexts.filter((_, i) => i !== index) });
    return true;
  }

  moveContext(index: number, delta: number): void {
    const contexts = [...this.grammar().contexts];
    const target = index + delta;
    if (target < 0 || target >= contexts.length) return;
    const [moved] = contexts.splice(index, 1);
    contexts.splice(target, 0, moved);
    this.setGrammar({ contexts });
  }

  setContextName(index: number, name: string): void {
    const contexts = this.grammar().contexts.map((c, i) =>
      i === index ? { ...c, name } : c,
    );
    this.setGrammar({ contexts });
  }

  setOptions(index: number, options: string[]): void {
    const contexts = this.grammar().contexts.map((c, i) =>
      i === index ? { ...c, options } : c,
    );
    this.setGrammar({ contexts });
  }

  requestBody(config?: Partial<PipelineSettings>): {
    name: string;
    grammar: GrammarSpec;
    config: Partial<PipelineSettings>;
  } {
    return { name: "", grammar: this.grammar(), config: config ?? this.store.get().draftConfig };
  }

  async submit(): Promise<JobRef | null> {
    const problems = validateGrammar(this.grammar());
    if (problems.length > 0) {
      this.message.textContent = problems.join("; ");
      return null;
    }
    this.message.textContent = "submitting…";
    try {
      const ref = await this.api.createDataset(
        this.grammar(),
        this.store.get().draftConfig,
      );
      this.message.textContent = `generation started: job ${ref.job_id}`;
      this.store.update({
        selectedDataset: ref.dataset_id ?? null,
        activeJobs: [...this.store.get().activeJobs, ref.job_id],
      });
      this.onSubmitted(ref);
      return ref;
    } catch (err) {
      this.message.textContent = `request failed: ${(err as Error).message}`;
      return null;
    }
  }

  private setGrammar(grammar: GrammarSpec): void {
    this.message.textContent = "";
    this.store.update({ draftGrammar: grammar });
    this.render();
  }

  private render(): void {
    clear(this.list);
    const grammar = this.grammar();
    grammar.contexts.forEach((context, index) => {
      const nameInput = el("input", {
        class: "context-name",
        value: context.name,
      }) as HTMLInputElement;
      nameInput.disabled = context.name === "category";
      nameInput.addEventListener("change", () => this.setContextName(index, nameInput.value));

      const optionsInput = el("input", {
        class: "context-options",
        value: context.options.join(", "),
        placeholder: "comma-separated options",
      }) as HTMLInputElement;
      optionsInput.addEventListener("change", () =>
        this.setOptions(
          index,
          optionsInput.value.split(",").map((o) => o.trim()).filter(Boolean),
        ),
      );

      const up = el("button", { class: "move-up", title: "more influence" }, ["↑"]);
      up.addEventListener("click", () => this.moveContext(index, -1));
      const down = el("button", { class: "move-down", title: "less influence" }, ["↓"]);
      down.addEventListener("click", () => this.moveContext(index, 1));
      const remove = el("button", { class: "remove-context" }, ["✕"]);
      remove.addEventListener("click", () => this.removeContext(index));

      const badge =
        context.name === "category"
          ? el("span", { class: "badge mandatory" }, ["mandatory"])
          : el("span", { class: "badge" }, [String(index + 1)]);
      this.list.append(
        el("div", { class: "context-row", "data-context": context.name }, [
          badge,
          nameInput,
          optionsInput,
          up,
          down,
          remove,
        ]),
      );
    });
    this.preview.textContent = simplisticPreview(grammar);
  }
}
