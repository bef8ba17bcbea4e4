/** Content script: smiley, scrollbar tint, and the in-page panel stack.
 *
 * All behavior lives in UiController; this file only paints UiState into the
 * page and forwards user input. Everything is created with DOM APIs and
 * textContent so model-provided strings are never interpreted as HTML.
 */

import { ApiClient } from "./api";
import { UiController } from "./controller";
import { chatFor, Panel, smileyColor, smileyGlyph, scrollbarColor, UiState } from "./state";
import {
  BASE_URL_KEY,
  DEFAULT_BASE_URL,
  defaultStorage,
  KeyValueStorage,
} from "./storage";
import { criterionScope, GENERAL_SCOPE } from "./types";

declare const chrome: any;

const COLOR_CSS: Record<string, string> = {
  green: "#1f9d55",
  yellow: "#d6a321",
  red: "#c0392b",
  unknown: "#8a8a8a",
  neutral: "#b0b0b0",
};

const ROOT_ID = "policylens-root";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function render(root: HTMLElement, state: UiState, controller: UiController): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  root.appendChild(renderSmiley(doc, state, controller));
  const tint = scrollbarColor(state);
  if (tint !== null) {
    const strip = el(doc, "div", {
      id: "policylens-scrollbar",
      "data-color": tint,
      style:
        "position:fixed;top:0;right:0;width:6px;height:100vh;z-index:2147483645;" +
        `background:${COLOR_CSS[tint]};pointer-events:none;`,
    });
    root.appendChild(strip);
  }
  if (state.panel.kind !== "none") {
    root.appendChild(renderPanel(doc, state, controller));
  }
}

function renderSmiley(doc: Document, state: UiState, controller: UiController): HTMLElement {
  const color = smileyColor(state);
  const position = state.smileyPosition;
  const place = position
    ? `left:${position.x}px;top:${position.y}px;`
    : "right:16px;top:50vh;";
  const smiley = el(
    doc,
    "button",
    {
      id: "policylens-smiley",
      "data-color": color,
      title: color === "neutral" ? "Assessment service unreachable" : "Privacy assessment",
      style:
        "position:fixed;width:44px;height:44px;border-radius:50%;border:2px solid #fff;" +
        "z-index:2147483646;cursor:pointer;font-size:16px;color:#fff;" +
        `box-shadow:0 1px 4px rgba(0,0,0,.4);${place}background:${COLOR_CSS[color]};`,
    },
    state.loading ? "…" : smileyGlyph(state),
  );

  let dragStart: { x: number; y: number } | null = null;
  let dragged = false;
  smiley.addEventListener("pointerdown", (event: PointerEvent) => {
    dragStart = { x: event.clientX, y: event.clientY };
    dragged = false;
  });
  smiley.addEventListener("pointermove", (event: PointerEvent) => {
    if (!dragStart) {
      return;
    }
    if (Math.abs(event.clientX - dragStart.x) + Math.abs(event.clientY - dragStart.y) > 4) {
      dragged = true;
      smiley.style.left = `${event.clientX - 22}px`;
      smiley.style.top = `${event.clientY - 22}px`;
      smiley.style.right = "auto";
    }
  });
  smiley.addEventListener("pointerup", (event: PointerEvent) => {
    if (dragged) {
      void controller.setSmileyPosition({ x: event.clientX - 22, y: event.clientY - 22 });
    }
    dragStart = null;
  });
  smiley.addEventListener("click", () => {
    if (dragged) {
      dragged = false;
      return;
    }
    if (state.panel.kind === "none") {
      controller.openPanel({ kind: "overview" });
    } else {
      controller.closePanel();
    }
  });
  return smiley;
}

function renderPanel(doc: Document, state: UiState, controller: UiController): HTMLElement {
  const panel = el(doc, "div", {
    id: "policylens-panel",
    "data-panel": state.panel.kind,
    style:
      "position:fixed;top:60px;right:24px;width:380px;max-height:70vh;overflow-y:auto;" +
      "background:#fff;color:#222;border:1px solid #ccc;border-radius:8px;" +
      "box-shadow:0 4px 16px rgba(0,0,0,.25);z-index:2147483646;" +
      "font-family:system-ui,sans-serif;font-size:14px;padding:12px;",
  });
  panel.appendChild(renderTopBar(doc, state, controller));
  switch (state.panel.kind) {
    case "overview":
      panel.appendChild(renderOverview(doc, state, controller));
      break;
    case "dashboard":
      panel.appendChild(renderDashboard(doc, state, controller));
      break;
    case "chat":
      panel.appendChild(renderChat(doc, state, controller, state.panel.scope));
      break;
    case "settings":
      panel.appendChild(renderSettings(doc, state, controller));
      break;
    case "policy_text":
      panel.appendChild(renderPolicyText(doc, state));
      break;
  }
  return panel;
}

function renderTopBar(doc: Document, state: UiState, controller: UiController): HTMLElement {
  const bar = el(doc, "div", { style: "display:flex;gap:6px;margin-bottom:8px;" });
  const button = (action: string, label: string, onClick: () => void) => {
    const node = el(doc, "button", { "data-action": action }, label);
    node.addEventListener("click", onClick);
    bar.appendChild(node);
  };
  if (state.panel.kind !== "overview") {
    button("back", "←", () => controller.openPanel({ kind: "overview" }));
  }
  button("open-settings", "⚙", () => controller.openPanel({ kind: "settings" }));
  button("open-policy-text", "txt", () => void controller.openPolicyText());
  button("close", "✕", () => controller.closePanel());
  return bar;
}

function renderOverview(doc: Document, state: UiState, controller: UiController): HTMLElement {
  const box = el(doc, "div", { id: "policylens-overview" });
  const assessment = state.assessment;
  box.appendChild(el(doc, "h2", {}, "Privacy overview"));
  if (!assessment || assessment.status !== "ok") {
    box.appendChild(
      el(doc, "p", { "data-role": "unknown-note" },
        "No assessment is available for this site" +
        (assessment ? ` (${assessment.status}).` : "."))
    );
    return box;
  }
  box.appendChild(
    el(doc, "p", {}, `Overall rating for ${assessment.domain}:`),
  );
  box.appendChild(
    el(doc, "strong", { "data-role": "overall", "data-color": assessment.overall_color },
      assessment.overall_color),
  );
  if (assessment.truncated) {
    box.appendChild(
      el(doc, "p", { "data-role": "truncation-note", style: "font-style:italic;" },
        "Note: the policy was longer than the model budget; the assessment is " +
        "based on a truncated text."),
    );
  }
  const heading = assessment.pressing_issues.length
    ? "Most pressing issues"
    : "No pressing issues found";
  box.appendChild(el(doc, "h3", {}, heading));
  const list = el(doc, "ul", { id: "policylens-pressing" });
  for (const name of assessment.pressing_issues) {
    list.appendChild(
      el(doc, "li", {
        class: "pressing",
        style: `color:${COLOR_CSS.red};font-weight:bold;`,
      }, name),
    );
  }
  box.appendChild(list);

  const nav = el(doc, "div", { style: "display:flex;gap:8px;margin-top:8px;" });
  const dashboard = el(doc, "button", { "data-action": "open-dashboard" }, "Dashboard");
  dashboard.addEventListener("click", () => controller.openPanel({ kind: "dashboard" }));
  const chat = el(doc, "button", { "data-action": "open-general-chat" }, "General Chat");
  chat.addEventListener("click", () => void controller.openChat(GENERAL_SCOPE));
  nav.appendChild(dashboard);
  nav.appendChild(chat);
  box.appendChild(nav);

  const clear = el(doc, "button", {
    "data-action": "clear-history",
    style: "margin-top:12px;",
  }, "Delete chat history");
  clear.addEventListener("click", () => void controller.clearHistory());
  box.appendChild(clear);
  return box;
}

function renderDashboard(doc: Document, state: UiState, controller: UiController): HTMLElement {
  const box = el(doc, "div", { id: "policylens-dashboard" });
  box.appendChild(el(doc, "h2", {}, "Evaluation criteria"));
  const assessment = state.assessment;
  if (!assessment || assessment.status !== "ok") {
    box.appendChild(el(doc, "p", {}, "No assessment available."));
    return box;
  }
  const toggle = el(doc, "button", { "data-action": "toggle-descriptions" },
    state.showCriteriaDescriptions ? "Hide criteria descriptions" : "Show criteria descriptions");
  toggle.addEventListener("click", () => controller.toggleCriteriaDescriptions());
  box.appendChild(toggle);
  for (const criterion of assessment.criteria) {
    const row = el(doc, "div", {
      class: "criterion",
      "data-name": criterion.name,
      "data-color": criterion.color,
      style: "margin-top:10px;border-top:1px solid #eee;padding-top:6px;",
    });
    const dot = el(doc, "span", {
      class: "criterion-smiley",
      "data-color": criterion.color,
      style:
        "display:inline-block;width:14px;height:14px;border-radius:50%;margin-right:6px;" +
        `background:${COLOR_CSS[criterion.color]};`,
    });
    row.appendChild(dot);
    row.appendChild(el(doc, "span", { class: "criterion-name" }, criterion.name));
    row.appendChild(el(doc, "span", { class: "criterion-score" }, ` ${criterion.score}/5`));
    if (state.showCriteriaDescriptions) {
      row.appendChild(
        el(doc, "div", { class: "criterion-description" }, criterion.justification),
      );
    }
    const learn = el(doc, "button", {
      "data-action": "learn-more",
      "data-scope": criterionScope(criterion.name),
      style: "display:block;margin-top:4px;",
    }, "Learn more!");
    learn.addEventListener("click", () =>
      void controller.openChat(criterionScope(criterion.name)),
    );
    row.appendChild(learn);
    box.appendChild(row);
  }
  return box;
}

function renderChat(
  doc: Document,
  state: UiState,
  controller: UiController,
  scope: string,
): HTMLElement {
  const box = el(doc, "div", { id: "policylens-chat", "data-scope": scope });
  const title = scope === GENERAL_SCOPE
    ? "General Chat"
    : `Criteria Chat: ${scope.slice("criterion:".length)}`;
  box.appendChild(el(doc, "h2", {}, title));

  const chat = chatFor(state, scope);
  const transcript = el(doc, "div", { class: "transcript" });
  for (const turn of chat.messages) {
    transcript.appendChild(
      el(doc, "div", {
        class: "message",
        "data-role": turn.role,
        style: turn.role === "user" ? "font-weight:bold;margin-top:6px;" : "margin-top:2px;",
      }, turn.text),
    );
  }
  box.appendChild(transcript);

  if (chat.pending) {
    box.appendChild(el(doc, "p", { class: "pending" }, "Waiting for answer…"));
  }

  const chips = el(doc, "div", { class: "chips", style: "margin-top:8px;" });
  for (const suggestion of chat.suggestions) {
    const chip = el(doc, "button", {
      class: "chip",
      "data-action": "chip",
      style: "display:block;margin-top:4px;text-align:left;",
    }, suggestion);
    chip.addEventListener("click", () => void controller.ask(scope, suggestion));
    chips.appendChild(chip);
  }
  box.appendChild(chips);

  const form = el(doc, "form", { class: "ask-form", style: "margin-top:8px;display:flex;gap:6px;" });
  const input = el(doc, "input", {
    type: "text",
    class: "question-input",
    placeholder: "Ask your own question…",
    style: "flex:1;",
  });
  const send = el(doc, "button", { type: "submit", "data-action": "send" }, "Send");
  form.appendChild(input);
  form.appendChild(send);
  form.addEventListener("submit", (event: Event) => {
    event.preventDefault();
    const question = input.value.trim();
    if (question) {
      input.value = "";
      void controller.ask(scope, question);
    }
  });
  box.appendChild(form);
  return box;
}

const LENGTH_LEVELS = ["short", "medium", "long"] as const;
const COMPLEXITY_LEVELS = ["no_prior", "basic", "expert"] as const;

function renderSettings(doc: Document, state: UiState, controller: UiController): HTMLElement {
  const box = el(doc, "div", { id: "policylens-settings" });
  box.appendChild(el(doc, "h2", {}, "Settings"));
  box.appendChild(el(doc, "p", {}, "Applies to all chats and all future assessments."));

  const slider = (
    label: string,
    name: string,
    levels: readonly string[],
    current: string,
    onChange: (value: string) => void,
  ) => {
    const wrap = el(doc, "div", { style: "margin-top:8px;" });
    wrap.appendChild(el(doc, "label", {}, `${label}: ${current}`));
    const input = el(doc, "input", {
      type: "range",
      min: "0",
      max: String(levels.length - 1),
      step: "1",
      value: String(levels.indexOf(current)),
      "data-setting": name,
      style: "width:100%;",
    });
    input.addEventListener("change", () => {
      onChange(levels[Number(input.value)]);
    });
    wrap.appendChild(input);
    box.appendChild(wrap);
  };

  slider("Response length", "length", LENGTH_LEVELS, state.settings.length, (value) => {
    void controller.changeSettings({
      ...state.settings,
      length: value as (typeof LENGTH_LEVELS)[number],
    });
  });
  slider(
    "Complexity",
    "complexity",
    COMPLEXITY_LEVELS,
    state.settings.complexity,
    (value) => {
      void controller.changeSettings({
        ...state.settings,
        complexity: value as (typeof COMPLEXITY_LEVELS)[number],
      });
    },
  );
  return box;
}

function renderPolicyText(doc: Document, state: UiState): HTMLElement {
  const box = el(doc, "div", { id: "policylens-policy-text" });
  box.appendChild(el(doc, "h2", {}, "Scraped policy text"));
  if (!state.policyText) {
    box.appendChild(el(doc, "p", {}, "No policy text stored for this site."));
    return box;
  }
  box.appendChild(
    el(doc, "p", { class: "policy-meta" },
      `${state.policyText.word_count} words from ${state.policyText.source_url}`),
  );
  box.appendChild(
    el(doc, "pre", { style: "white-space:pre-wrap;" }, state.policyText.text),
  );
  return box;
}

export interface Mounted {
  controller: UiController;
  root: HTMLElement;
}

export async function mount(
  doc: Document,
  api: ApiClient,
  storage = defaultStorage(),
): Promise<Mounted> {
  let root = doc.getElementById(ROOT_ID) as HTMLElement | null;
  if (!root) {
    root = el(doc, "div", { id: ROOT_ID });
    doc.body.appendChild(root);
  }
  const controller: UiController = new UiController(api, storage, (state) =>
    render(root as HTMLElement, state, controller),
  );
  await controller.init();
  return { controller, root };
}

async function bootstrap(): Promise<void> {
  const storage = defaultStorage();
  const baseUrl = ((await storage.get(BASE_URL_KEY)) as string) || DEFAULT_BASE_URL;
  const { controller } = await mount(document, new ApiClient(baseUrl), storage);
  await controller.onNavigation(location.href);
  if (typeof chrome !== "undefined" && chrome?.runtime?.onMessage) {
    chrome.runtime.onMessage.addListener((message: any) => {
      if (message?.type === "policylens:navigated") {
        void controller.onNavigation(location.href);
      }
      if (message?.type === "policylens:toggle") {
        if (controller.state.panel.kind === "none") {
          controller.openPanel({ kind: "overview" });
        } else {
          controller.closePanel();
        }
      }
    });
  }
}

// Only self-start inside a real extension page; tests drive mount() directly.
if (typeof chrome !== "undefined" && chrome?.runtime?.id && typeof document !== "undefined") {
  void bootstrap();
}
