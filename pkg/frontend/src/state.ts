/** UI state: one assessment snapshot, one open panel, per-scope chats. */

import type {
  AssessmentView,
  ChatView,
  PolicyTextView,
  SettingsView,
  TrafficColor,
} from "./types";

export type Panel =
  | { kind: "none" }
  | { kind: "overview" }
  | { kind: "dashboard" }
  | { kind: "chat"; scope: string }
  | { kind: "settings" }
  | { kind: "policy_text" };

export interface SmileyPosition {
  x: number;
  y: number;
}

export interface UiState {
  pageUrl: string | null;
  domain: string | null;
  assessment: AssessmentView | null;
  /** false when the local service cannot be reached (neutral icon + tooltip) */
  reachable: boolean;
  loading: boolean;
  panel: Panel;
  chats: Record<string, ChatView>;
  settings: SettingsView;
  policyText: PolicyTextView | null;
  smileyPosition: SmileyPosition | null;
  showCriteriaDescriptions: boolean;
}

export function initialState(): UiState {
  return {
    pageUrl: null,
    domain: null,
    assessment: null,
    reachable: true,
    loading: false,
    panel: { kind: "none" },
    chats: {},
    settings: { length: "medium", complexity: "no_prior" },
    policyText: null,
    smileyPosition: null,
    showCriteriaDescriptions: false,
  };
}

/** Exactly one panel is open at a time; opening replaces the previous one. */
export function withPanel(state: UiState, panel: Panel): UiState {
  return { ...state, panel };
}

export function chatFor(state: UiState, scope: string): ChatView {
  return state.chats[scope] ?? { messages: [], suggestions: [], pending: false };
}

/** The smiley renders this service-provided color token verbatim. */
export function smileyColor(state: UiState): TrafficColor | "neutral" {
  if (!state.reachable) {
    return "neutral";
  }
  if (state.assessment === null) {
    return "unknown";
  }
  return state.assessment.overall_color;
}

/** Gray question mark whenever the service reports the unknown state. */
export function smileyGlyph(state: UiState): string {
  switch (smileyColor(state)) {
    case "neutral":
      return "!";
    case "unknown":
      return "?";
    case "green":
      return ":)";
    case "yellow":
      return ":|";
    default:
      return ":(";
  }
}

/** Scrollbar tint mirrors the smiley; hidden for unknown/unreachable. */
export function scrollbarColor(state: UiState): TrafficColor | null {
  const color = smileyColor(state);
  return color === "green" || color === "yellow" || color === "red" ? color : null;
}
