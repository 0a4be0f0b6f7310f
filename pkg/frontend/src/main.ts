import { createApp } from "./app.js";

const root = document.getElementById("root");
if (root) {
  const app = createApp(root, "");
  void app.init().then(() => app.start());
}
