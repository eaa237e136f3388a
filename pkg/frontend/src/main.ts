import { HttpServiceClient } from "./api.js";
import { ExplorerApp } from "./app.js";
import { ExplorerController } from "./state.js";

const container = document.getElementById("explorer");
if (!container) {
  throw new Error("missing #explorer container");
}
const controller = new ExplorerController(new HttpServiceClient(""));
new ExplorerApp(controller, container);
