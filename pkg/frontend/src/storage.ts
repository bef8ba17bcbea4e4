/** Extension storage for the smiley position and service base URL.
 *
 * Uses chrome.storage.local when running inside the extension and an
 * in-memory map otherwise (tests, plain pages).
 */

declare const chrome: any;

export interface KeyValueStorage {
  get(key: string): Promise<unknown>;
  set(key: string, value: unknown): Promise<void>;
}

export class MemoryStorage implements KeyValueStorage {
  private data = new Map<string, unknown>();

  async get(key: string): Promise<unknown> {
    return this.data.get(key);
  }

  async set(key: string, value: unknown): Promise<void> {
    this.data.set(key, value);
  }
}

class ChromeStorage implements KeyValueStorage {
  get(key: string): Promise<unknown> {
    return new Promise((resolve) =>
      chrome.storage.local.get([key], (items: Record<string, unknown>) =>
        resolve(items[key]),
      ),
    );
  }

  set(key: string, value: unknown): Promise<void> {
    return new Promise((resolve) =>
      chrome.storage.local.set({ [key]: value }, () => resolve()),
    );
  }
}

export function defaultStorage(): KeyValueStorage {
  if (typeof chrome !== "undefined" && chrome?.storage?.local) {
    return new ChromeStorage();
  }
  return new MemoryStorage();
}

export const SMILEY_POSITION_KEY = "policylens.smileyPosition";
export const BASE_URL_KEY = "policylens.baseUrl";
export const DEFAULT_BASE_URL = "http://127.0.0.1:8900";
