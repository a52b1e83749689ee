import { ApiClient } from "./api.js";
import { createChatApp } from "./app.js";

declare global {
  interface Window {
    DOCFORGE_API_BASE?: string;
  }
}

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const api = new ApiClient(window.DOCFORGE_API_BASE ?? "http://127.0.0.1:8080");
const app = createChatApp(root, api);
void app.loadHealth();
