import { Api } from "./api";
import { mountWizard } from "./wizard";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const api = new Api("");
  try {
    const catalog = await api.parameterCatalog();
    const version = await api.version();
    const footer = document.getElementById("service-version");
    if (footer) footer.textContent = `service ${version}`;
    mountWizard(root, api, catalog);
  } catch (err) {
    const banner = document.createElement("p");
    banner.className = "error";
    banner.textContent =
      `Cannot reach the training service (${String(err)}). ` +
      "Start it with: preflearn serve";
    root.appendChild(banner);
  }
}

void boot();
