/** Typed client for the local assessment service (v1 wire contract). */

import type {
  AssessmentView,
  PolicyTextView,
  SettingsView,
} from "./types";

export interface ChatResult {
  answer: string;
  suggestions: string[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      ...init,
      headers: { "Content-Type": "application/json", ...(init?.headers ?? {}) },
    });
    if (response.status === 204) {
      return undefined as T;
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, String(detail));
    }
    return (await response.json()) as T;
  }

  assess(pageUrl: string, policyUrl?: string): Promise<AssessmentView> {
    return this.request("/assess", {
      method: "POST",
      body: JSON.stringify({ page_url: pageUrl, policy_url: policyUrl ?? null }),
    });
  }

  chat(
    domain: string,
    scope: string,
    question: string,
    settings?: SettingsView,
  ): Promise<ChatResult> {
    return this.request("/chat", {
      method: "POST",
      body: JSON.stringify({ domain, scope, question, settings: settings ?? null }),
    });
  }

  suggestions(domain: string, scope: string): Promise<{ suggestions: string[] }> {
    const params = new URLSearchParams({ domain, scope });
    return this.request(`/suggestions?${params}`);
  }

  policyText(domain: string): Promise<PolicyTextView> {
    const params = new URLSearchParams({ domain });
    return this.request(`/policy-text?${params}`);
  }

  getSettings(): Promise<SettingsView> {
    return this.request("/settings");
  }

  putSettings(settings: SettingsView): Promise<SettingsView> {
    return this.request("/settings", {
      method: "PUT",
      body: JSON.stringify(settings),
    });
  }

  clearHistory(domain: string): Promise<void> {
    return this.request(`/history/${encodeURIComponent(domain)}`, { method: "DELETE" });
  }

  postEvent(kind: string, payload: Record<string, string>): Promise<unknown> {
    return this.request("/events", {
      method: "POST",
      body: JSON.stringify({ kind, payload }),
    });
  }
}
