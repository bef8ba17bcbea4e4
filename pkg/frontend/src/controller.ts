/** Drives all UI behavior; the content script only paints the state. */

import { ApiClient } from "./api";
import {
  chatFor,
  initialState,
  Panel,
  SmileyPosition,
  UiState,
  withPanel,
} from "./state";
import { KeyValueStorage, MemoryStorage, SMILEY_POSITION_KEY } from "./storage";
import { GENERAL_SCOPE, SettingsView } from "./types";

type Listener = (state: UiState) => void;

export class UiController {
  state: UiState = initialState();

  constructor(
    private api: ApiClient,
    private storage: KeyValueStorage = new MemoryStorage(),
    private listener: Listener = () => {},
  ) {}

  private update(next: UiState): void {
    this.state = next;
    this.listener(next);
  }

  async init(): Promise<void> {
    const stored = (await this.storage.get(SMILEY_POSITION_KEY)) as
      | SmileyPosition
      | undefined;
    if (stored) {
      this.update({ ...this.state, smileyPosition: stored });
    }
    try {
      const settings = await this.api.getSettings();
      this.update({ ...this.state, settings });
    } catch {
      // settings stay at defaults until the service is reachable
    }
  }

  /** Assess the page the user navigated to; stale responses are dropped. */
  async onNavigation(pageUrl: string): Promise<void> {
    this.update({
      ...this.state,
      pageUrl,
      loading: true,
      panel: { kind: "none" },
      chats: {},
      policyText: null,
    });
    try {
      const assessment = await this.api.assess(pageUrl);
      if (this.state.pageUrl !== pageUrl) {
        return; // a newer navigation superseded this render
      }
      this.update({
        ...this.state,
        domain: assessment.domain,
        assessment,
        reachable: true,
        loading: false,
      });
    } catch (error) {
      if (this.state.pageUrl !== pageUrl) {
        return;
      }
      this.update({
        ...this.state,
        assessment: null,
        domain: null,
        reachable: false,
        loading: false,
      });
    }
  }

  openPanel(panel: Panel): void {
    this.update(withPanel(this.state, panel));
  }

  closePanel(): void {
    this.update(withPanel(this.state, { kind: "none" }));
  }

  toggleCriteriaDescriptions(): void {
    this.update({
      ...this.state,
      showCriteriaDescriptions: !this.state.showCriteriaDescriptions,
    });
  }

  /** Open a chat panel; a thread without suggestions gets them eagerly. */
  async openChat(scope: string): Promise<void> {
    this.openPanel({ kind: "chat", scope });
    const chat = chatFor(this.state, scope);
    if (chat.suggestions.length > 0 || chat.pending || !this.state.domain) {
      return;
    }
    this.setChat(scope, { ...chat, pending: true });
    try {
      const result = await this.api.suggestions(this.state.domain, scope);
      this.setChat(scope, {
        ...chatFor(this.state, scope),
        suggestions: result.suggestions,
        pending: false,
      });
    } catch {
      this.setChat(scope, { ...chatFor(this.state, scope), pending: false });
    }
  }

  /** Send a question; the answer arrives whole, then chips are replaced. */
  async ask(scope: string, question: string): Promise<void> {
    if (!this.state.domain) {
      return;
    }
    const before = chatFor(this.state, scope);
    this.setChat(scope, { ...before, pending: true });
    try {
      const result = await this.api.chat(this.state.domain, scope, question);
      const chat = chatFor(this.state, scope);
      this.setChat(scope, {
        messages: [
          ...chat.messages,
          { role: "user", text: question },
          { role: "assistant", text: result.answer },
        ],
        suggestions: result.suggestions,
        pending: false,
      });
    } catch (error) {
      this.setChat(scope, { ...chatFor(this.state, scope), pending: false });
      throw error;
    }
  }

  async changeSettings(settings: SettingsView): Promise<void> {
    const applied = await this.api.putSettings(settings);
    this.update({ ...this.state, settings: applied });
  }

  /** Clears every chat for the domain; dashboard ratings stay intact. */
  async clearHistory(): Promise<void> {
    if (!this.state.domain) {
      return;
    }
    await this.api.clearHistory(this.state.domain);
    this.update({ ...this.state, chats: {} });
  }

  async openPolicyText(): Promise<void> {
    this.openPanel({ kind: "policy_text" });
    if (!this.state.domain || this.state.policyText) {
      return;
    }
    try {
      const policyText = await this.api.policyText(this.state.domain);
      this.update({ ...this.state, policyText });
    } catch {
      // panel shows the missing-text notice
    }
  }

  async setSmileyPosition(position: SmileyPosition): Promise<void> {
    this.update({ ...this.state, smileyPosition: position });
    await this.storage.set(SMILEY_POSITION_KEY, position);
  }

  generalChatScope(): string {
    return GENERAL_SCOPE;
  }

  private setChat(scope: string, chat: UiState["chats"][string]): void {
    this.update({
      ...this.state,
      chats: { ...this.state.chats, [scope]: chat },
    });
  }
}
