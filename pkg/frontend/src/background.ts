/** MV3 service worker: nudges content scripts on navigation and icon clicks. */

declare const chrome: any;

function notify(tabId: number, type: string): void {
  chrome.tabs.sendMessage(tabId, { type }, () => {
    // Content script may not be injected (e.g. chrome:// pages); ignore.
    void chrome.runtime.lastError;
  });
}

if (typeof chrome !== "undefined" && chrome?.tabs) {
  chrome.tabs.onUpdated.addListener(
    (tabId: number, changeInfo: { status?: string }) => {
      if (changeInfo.status === "complete") {
        notify(tabId, "policylens:navigated");
      }
    },
  );
  chrome.tabs.onActivated.addListener(({ tabId }: { tabId: number }) => {
    notify(tabId, "policylens:navigated");
  });
  chrome.action?.onClicked?.addListener((tab: { id?: number }) => {
    if (tab.id !== undefined) {
      notify(tab.id, "policylens:toggle");
    }
  });
}

export {};
