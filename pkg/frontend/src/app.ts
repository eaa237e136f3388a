// Four-panel explorer: knowledge base, query, moves, history. Pure
// rendering over the controller's state; clicks call back into it.

import { Move, NavigationChain } from "./api.js";
import { ExplorationState, ExplorerController } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function badge(label: string, kind: "ok" | "bad" | "info"): HTMLElement {
  return el("span", `badge badge-${kind}`, label);
}

export class ExplorerApp {
  private root: HTMLElement;
  private kbInput!: HTMLTextAreaElement;
  private queryInput!: HTMLTextAreaElement;

  constructor(private readonly controller: ExplorerController,
              container: HTMLElement) {
    this.root = container;
    controller.subscribe((state) => this.render(state));
    this.render(controller.current);
  }

  private render(state: ExplorationState): void {
    const kbText = this.kbInput?.value ?? "";
    const queryFocus = document.activeElement === this.queryInput;
    this.root.replaceChildren(
      this.kbPanel(state, kbText),
      this.queryPanel(state),
      this.movesPanel(state),
      this.historyPanel(state),
    );
    if (queryFocus) {
      this.queryInput.focus();
    }
  }

  private kbPanel(state: ExplorationState, previous: string): HTMLElement {
    const panel = el("section", "panel kb-panel");
    panel.appendChild(el("h2", undefined, "Knowledge base"));
    this.kbInput = el("textarea", "kb-text");
    this.kbInput.rows = 10;
    this.kbInput.value = previous;
    this.kbInput.placeholder = "Paste a .dlhr knowledge base here";
    panel.appendChild(this.kbInput);
    const load = el("button", "load-kb", "Load");
    load.onclick = () => void this.controller.loadKb(this.kbInput.value);
    panel.appendChild(load);

    const badges = el("div", "badges");
    if (state.summary) {
      badges.appendChild(badge(state.summary.class, "info"));
      badges.appendChild(state.summary.consistent
        ? badge("consistent", "ok")
        : badge("inconsistent", "bad"));
      const adm = state.summary.admissibility;
      if (adm.admissible !== null) {
        badges.appendChild(adm.admissible
          ? badge("admissible", "ok")
          : badge("not admissible", "bad"));
      }
      if (state.summary.ell !== null) {
        badges.appendChild(badge(`bound ${state.summary.ell}`, "info"));
      }
    }
    panel.appendChild(badges);
    return panel;
  }

  private queryPanel(state: ExplorationState): HTMLElement {
    const panel = el("section", "panel query-panel");
    panel.appendChild(el("h2", undefined, "Query"));
    this.queryInput = el("textarea", "query-text");
    this.queryInput.rows = 3;
    this.queryInput.value = state.queryText;
    this.queryInput.oninput = () =>
      this.controller.setQuery(this.queryInput.value);
    panel.appendChild(this.queryInput);
    const run = el("button", "run-query", "Run");
    run.disabled = state.busy;
    run.onclick = () => void this.controller.run();
    panel.appendChild(run);

    if (state.error) {
      panel.appendChild(el("div", "error", state.error));
    }
    if (state.answers) {
      const count = state.answers.answers.length;
      panel.appendChild(el("div", "answer-count",
        `${count} answer${count === 1 ? "" : "s"} ` +
        `(${state.answers.method}, ${state.answers.exact ? "exact" : "approximate"})`));
      const table = el("table", "answers");
      for (const row of state.answers.answers) {
        const tr = el("tr");
        for (const cell of row) {
          tr.appendChild(el("td", undefined, cell));
        }
        table.appendChild(tr);
      }
      panel.appendChild(table);
    }
    panel.appendChild(this.navigationBar(state));
    return panel;
  }

  private navigationBar(state: ExplorationState): HTMLElement {
    const bar = el("div", "dimension-bar");
    for (const [variable, options] of state.navigation) {
      const group = el("span", "dimension-var", `?${variable} `);
      const up = el("button", "roll-up", "roll up");
      up.disabled = options.up.length === 0;
      up.onclick = () => this.chooseChain(options.up, "up");
      const down = el("button", "drill-down", "drill down");
      down.disabled = options.down.length === 0;
      down.onclick = () => this.chooseChain(options.down, "down");
      group.appendChild(up);
      group.appendChild(down);
      bar.appendChild(group);
    }
    return bar;
  }

  private chooseChain(chains: NavigationChain[], direction: "up" | "down"): void {
    if (chains.length === 0) {
      return;
    }
    // Several chains (one per fact): the first is previewed; a picker would
    // go here once designs exist for it.
    void this.controller.applyChain(chains[0], direction);
  }

  private movesPanel(state: ExplorationState): HTMLElement {
    const panel = el("section", "panel moves-panel");
    panel.appendChild(el("h2", undefined, "Reformulation moves"));
    panel.appendChild(this.moveList("Relax (more answers)", state.relaxMoves));
    panel.appendChild(this.moveList("Restrain (fewer answers)", state.restrainMoves));
    return panel;
  }

  private moveList(title: string, moves: Move[]): HTMLElement {
    const wrap = el("div", "move-group");
    wrap.appendChild(el("h3", undefined, `${title} (${moves.length})`));
    const list = el("ul", "moves");
    for (const move of moves) {
      const item = el("li", "move");
      const head = el("div", "move-head");
      head.appendChild(el("code", "rule", move.rule));
      head.appendChild(el("span", "just", ` ${move.description}`));
      item.appendChild(head);
      item.appendChild(el("pre", "preview", move.result_query));
      const apply = el("button", "apply-move", "Apply");
      apply.onclick = () => void this.controller.applyMove(move);
      item.appendChild(apply);
      list.appendChild(item);
    }
    wrap.appendChild(list);
    return wrap;
  }

  private historyPanel(state: ExplorationState): HTMLElement {
    const panel = el("section", "panel history-panel");
    panel.appendChild(el("h2", undefined, "History"));
    const crumbs = el("ol", "breadcrumbs");
    state.history.forEach((entry, index) => {
      const crumb = el("li", "crumb");
      const button = el("button", "rewind",
        entry.via ? `${entry.via}` : "start");
      button.title = entry.query;
      button.onclick = () => void this.controller.rewind(index);
      crumb.appendChild(button);
      crumbs.appendChild(crumb);
    });
    panel.appendChild(crumbs);
    return panel;
  }
}
