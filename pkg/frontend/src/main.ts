/** Browser bootstrap: wires rendered HTML into the page and dispatches
 * clicks back into the view model. */

import { GatewayClient, loadRuntimeConfig } from "./api.js";
import { renderAll } from "./render.js";
import type { ContainmentLevel, Verdict } from "./types.js";
import {
  ConsoleViewModel,
  confirmationLabel,
  requiresConfirmation,
} from "./viewmodel.js";

function mount(id: string, html: string): void {
  const element = document.getElementById(id);
  if (element && element.innerHTML !== html) element.innerHTML = html;
}

function collectModifiedArgs(ticketId: string): Record<string, unknown> {
  const args: Record<string, unknown> = {};
  document
    .querySelectorAll<HTMLInputElement>(`input[data-ticket="${ticketId}"]`)
    .forEach((input) => {
      args[input.dataset.arg as string] = input.value;
    });
  return args;
}

async function boot(): Promise<void> {
  const config = await loadRuntimeConfig();
  let operatorId = "";
  while (!operatorId) {
    operatorId = (window.prompt("operator id:") ?? "").trim();
  }
  const vm = new ConsoleViewModel(new GatewayClient(config), operatorId);
  const header = document.getElementById("operator");
  if (header) header.textContent = `operator: ${operatorId}`;

  const redraw = () => {
    const panels = renderAll(vm.state);
    mount("notices", panels.notices);
    mount("queue", panels.queue);
    mount("sessions", panels.sessions);
    mount("ledger", panels.ledger);
    mount("apg", panels.apg);
  };

  document.body.addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    const verdict = target.dataset.verdict as Verdict | undefined;
    if (verdict && target.dataset.ticket) {
      const ticketId = target.dataset.ticket;
      const modifiedArgs = verdict === "modify" ? collectModifiedArgs(ticketId) : undefined;
      await vm.submitDecision(ticketId, verdict, modifiedArgs);
      redraw();
      return;
    }
    const level = target.dataset.containment as ContainmentLevel | undefined;
    if (level && target.dataset.session) {
      if (requiresConfirmation(level) && !window.confirm(confirmationLabel(level))) return;
      await vm.applyContainment(target.dataset.session, level, `operator:${operatorId}`);
      redraw();
      return;
    }
    if (target.dataset.apg) {
      await vm.selectApg(target.dataset.apg);
      redraw();
      return;
    }
    if ("verifyLedger" in target.dataset) {
      await vm.refreshLedger();
      redraw();
    }
  });

  const loop = async () => {
    await vm.poll();
    redraw();
    window.setTimeout(loop, vm.state.nextPollMs);
  };
  await loop();
}

boot();
