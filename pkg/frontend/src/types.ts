/** Wire types for the policylens v1 JSON API. */

export type TrafficColor = "green" | "yellow" | "red" | "unknown";

export interface CriterionView {
  name: string;
  score: number;
  color: TrafficColor;
  justification: string;
}

export interface AssessmentView {
  domain: string;
  status: string;
  overall_color: TrafficColor;
  average: number | null;
  criteria: CriterionView[];
  pressing_issues: string[];
  policy_word_count: number;
  truncated: boolean;
  diagnostics?: string[];
}

export interface SettingsView {
  length: "short" | "medium" | "long";
  complexity: "no_prior" | "basic" | "expert";
}

export interface ChatTurn {
  role: "user" | "assistant";
  text: string;
}

export interface ChatView {
  messages: ChatTurn[];
  suggestions: string[];
  pending: boolean;
}

export interface PolicyTextView {
  domain: string;
  source_url: string;
  text: string;
  word_count: number;
}

/** Scope key format shared with the service: "general" | "criterion:<name>". */
export function criterionScope(name: string): string {
  return `criterion:${name}`;
}

export const GENERAL_SCOPE = "general";
