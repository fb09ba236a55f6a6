// Client-side validation mirroring the server rules, for instant feedback.
// The server stays authoritative; these checks only gate obviously bad input.

import type { GrammarSpec } from "./api.js";

export function validateGrammar(grammar: GrammarSpec): string[] {
  const problems: string[] = [];
  const categories = grammar.contexts.filter((c) => c.name === "category");
  if (categories.length !== 1) {
    problems.push("exactly one 'category' context is required");
  } else if (!categories[0].mandatory) {
    problems.push("the 'category' context must be mandatory");
  }
  const names = grammar.contexts.map((c) => c.name);
  if (new Set(names).size !== names.length) problems.push("context names must be unique");
  for (const context of grammar.contexts) {
    if (!context.name.trim()) problems.push("context names must be non-empty");
    if (context.options.length === 0) {
      problems.push(`context '${context.name}' needs at least one option`);
    }
    if (context.options.some((option) => !option.trim())) {
      problems.push(`context '${context.name}' has an empty option`);
    }
    if (new Set(context.options).size !== context.options.length) {
      problems.push(`context '${context.name}' has duplicate options`);
    }
  }
  return problems;
}

/** Keyword-only preview: one choice per context, joined in grammar order. */
export function simplisticPreview(grammar: GrammarSpec): string {
  return grammar.contexts
    .filter((c) => c.options.length > 0)
    .map((c) => c.options[0])
    .join(", ");
}

export function validateFilterDraft(beta: number, retention: number): string[] {
  const problems: string[] = [];
  if (!(beta > 0 && beta <= 1)) problems.push("beta must be in (0, 1]");
  if (!(retention > 0 && retention <= 1)) problems.push("retention target must be in (0, 1]");
  return problems;
}

/** Percentage with two decimals for display; values come from the server as fractions. */
export function percent(fraction: number): string {
  return `${(fraction * 100).toFixed(2)}%`;
}
